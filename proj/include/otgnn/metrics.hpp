#pragma once

#include <span>

#include "otgnn/tensor.hpp"

namespace otgnn {

double rmse(std::span<const double> predictions, std::span<const double> labels);

/// Rank-statistic ROC-AUC with average ranks for tied scores. Throws
/// MetricError when only one class is present.
double roc_auc(std::span<const double> scores, std::span<const double> labels01);

/// Throws MetricError when either side has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

/// Average-rank Spearman correlation (Pearson of the tie-averaged ranks).
double spearman(std::span<const double> x, std::span<const double> y);

struct CorrelationReport {
    double spearman = 0.0;
    double pearson = 0.0;
};

/// Over all unordered pairs of points: x = L2 distance between embedding
/// rows, y = |label difference|; returns Spearman and Pearson of (x, y).
CorrelationReport correlation_analysis(const Tensor& embeddings,
                                       std::span<const double> labels);

}  // namespace otgnn
