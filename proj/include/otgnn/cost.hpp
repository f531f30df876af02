#pragma once

namespace otgnn {

/// Ground cost between points: squared Euclidean distance or negative inner
/// product. Both choices yield identical optimal transport plans; objectives
/// differ by a marginal-determined constant.
enum class CostKind { SquaredL2, NegativeDot };

}  // namespace otgnn
