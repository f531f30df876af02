#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "otgnn/graph.hpp"

namespace otgnn {

enum class TaskKind { Regression, Classification };

std::string task_name(TaskKind task);
TaskKind task_from_name(const std::string& name);

struct Dataset {
    std::vector<Graph> graphs;
    TaskKind task = TaskKind::Regression;

    std::size_t size() const { return graphs.size(); }
};

struct SplitSpec {
    double train = 0.8, valid = 0.1, test = 0.1;
    std::uint64_t seed = 0;
};

struct LabelStats {
    double mean = 0.0;
    double std = 1.0;
};

/// JSONL graph format, one object per line:
///   {"id", "nodes": [[f...]], "edges": [[src,dst,[f...]], ...], "label", "task"}
/// with undirected edges listed once; the loader duplicates each into two
/// directed edges. Numeric fields round-trip bit-exactly.
Dataset load_jsonl(const std::string& path);
void save_jsonl(const Dataset& ds, const std::string& path);

/// Deterministic shuffle by seed, then partition: floor fractions for
/// train/valid, remainder to test. Splits are disjoint and covering.
std::array<Dataset, 3> split(const Dataset& ds, const SplitSpec& spec);

/// Regression: labels ← (y − mean_train)/std_train computed on the train
/// split only, applied to every given dataset; classification is a no-op.
LabelStats standardize_labels(Dataset& train, std::vector<Dataset*> others);

/// Epoch-dependent deterministic shuffle chunked into batches; the final
/// partial batch is kept.
std::vector<std::vector<int>> batches(const Dataset& ds, int batch_size, std::uint64_t seed,
                                      int epoch);

struct CsvRow {
    std::string smiles;
    std::string label;
    int line = 0;  // 1-based line number in the file
};

/// Reads a CSV with a header naming at least `smiles` and `label` columns
/// (quoted fields supported). Throws ConfigError if either column is missing.
std::vector<CsvRow> read_smiles_csv(const std::string& path);

}  // namespace otgnn
