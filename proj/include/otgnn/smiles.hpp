#pragma once

#include <string>
#include <vector>

#include "otgnn/graph.hpp"

namespace otgnn {

enum class BondOrder { Single, Double, Triple, Aromatic };

struct Atom {
    std::string element;  // as written; anything outside the supported set acts as "other"
    bool aromatic = false;
    int charge = 0;
    int explicit_h = -1;  // from brackets; −1 means derive from valence rules
};

struct Bond {
    int a = 0, b = 0;
    BondOrder order = BondOrder::Single;
};

/// Connectivity as parsed from a SMILES string, before featurization.
struct Molecule {
    std::vector<Atom> atoms;
    std::vector<Bond> bonds;
};

/// Parses the practical SMILES subset: organic-subset atoms, brackets with
/// isotope/charge/H-count (isotope parsed and discarded), aromatic lowercase
/// atoms, bonds - = # :, ring closures (digits and %nn), branches, and
/// dot-separated components kept as one disconnected graph. Stereo markers
/// / \ @ are accepted and ignored. Throws ParseError with a character offset
/// on malformed input.
Molecule parse_smiles(const std::string& s);

inline constexpr int kNodeFeatureDim = 11 + 6 + 5 + 1 + 5;  // 28
inline constexpr int kEdgeFeatureDim = 4 + 1;               // 5

/// Node features: one-hot element (11 incl. other) ⊕ one-hot degree 0–5 ⊕
/// one-hot charge clipped to [−2,2] ⊕ aromatic flag ⊕ one-hot implicit-H 0–4.
/// Edge features: one-hot bond order ⊕ in-ring flag (ring membership via
/// bridge detection). The result is finalized and ready for the encoder.
Graph featurize(const Molecule& mol);

}  // namespace otgnn
