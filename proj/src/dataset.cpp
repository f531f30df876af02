#include "otgnn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "otgnn/errors.hpp"
#include "otgnn/rng.hpp"

namespace otgnn {

void Graph::finalize() {
    const int n = num_nodes();
    const int e = num_edges();
    if (static_cast<int>(edge_features.rows()) != e)
        throw DataError("graph " + id + ": edge feature rows do not match edge count");

    std::vector<int> order(static_cast<std::size_t>(e));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int x, int y) {
        const DirectedEdge &a = edges[static_cast<std::size_t>(x)], &b = edges[static_cast<std::size_t>(y)];
        return a.src != b.src ? a.src < b.src : a.dst < b.dst;
    });
    std::vector<DirectedEdge> sorted_edges(static_cast<std::size_t>(e));
    Tensor sorted_features(e, edge_features.cols());
    for (int i = 0; i < e; ++i) {
        const int from = order[static_cast<std::size_t>(i)];
        sorted_edges[static_cast<std::size_t>(i)] = edges[static_cast<std::size_t>(from)];
        for (int j = 0; j < edge_features.cols(); ++j)
            sorted_features.at(i, j) = edge_features.at(from, j);
    }
    edges = std::move(sorted_edges);
    edge_features = std::move(sorted_features);

    for (const DirectedEdge& de : edges)
        if (de.src < 0 || de.src >= n || de.dst < 0 || de.dst >= n || de.src == de.dst)
            throw DataError("graph " + id + ": edge endpoints out of range");

    // Incoming edge lists per node, already in sorted source order.
    std::vector<std::vector<std::int32_t>> incoming(static_cast<std::size_t>(n));
    for (int k = 0; k < e; ++k)
        incoming[static_cast<std::size_t>(edges[static_cast<std::size_t>(k)].dst)].push_back(k);

    auto mg = std::make_shared<GatherPlan>();
    mg->offsets.assign(static_cast<std::size_t>(e) + 1, 0);
    for (int k = 0; k < e; ++k) {
        const DirectedEdge& de = edges[static_cast<std::size_t>(k)];
        for (std::int32_t incoming_edge : incoming[static_cast<std::size_t>(de.src)]) {
            // Exclude the reverse edge (dst → src) from the message into k.
            if (edges[static_cast<std::size_t>(incoming_edge)].src == de.dst) continue;
            mg->indices.push_back(incoming_edge);
        }
        mg->offsets[static_cast<std::size_t>(k) + 1] = static_cast<std::int32_t>(mg->indices.size());
    }
    msg_gather = std::move(mg);

    auto ng = std::make_shared<GatherPlan>();
    ng->offsets.assign(static_cast<std::size_t>(n) + 1, 0);
    {
        int k = 0;
        for (int v = 0; v < n; ++v) {
            while (k < e && edges[static_cast<std::size_t>(k)].src == v) {
                ng->indices.push_back(k);
                ++k;
            }
            ng->offsets[static_cast<std::size_t>(v) + 1] = static_cast<std::int32_t>(ng->indices.size());
        }
    }
    node_gather = std::move(ng);

    const int fv = node_features.cols(), fe = edge_features.cols();
    edge_inputs = Tensor(e, fv + fe);
    for (int k = 0; k < e; ++k) {
        const double* nf = node_features.row_ptr(edges[static_cast<std::size_t>(k)].src);
        double* row = edge_inputs.row_ptr(k);
        for (int j = 0; j < fv; ++j) row[j] = nf[j];
        const double* ef = edge_features.row_ptr(k);
        for (int j = 0; j < fe; ++j) row[fv + j] = ef[j];
    }
}

std::string task_name(TaskKind task) {
    return task == TaskKind::Regression ? "regression" : "classification";
}

TaskKind task_from_name(const std::string& name) {
    if (name == "regression") return TaskKind::Regression;
    if (name == "classification") return TaskKind::Classification;
    throw ConfigError("unknown task '" + name + "' (expected regression|classification)");
}

namespace {

using nlohmann::json;

Tensor tensor_from_rows(const json& rows, int expect_cols, const std::string& what, int line) {
    const int r = static_cast<int>(rows.size());
    const int c = r == 0 ? std::max(expect_cols, 0)
                         : static_cast<int>(rows.at(0).size());
    Tensor t(r, c);
    for (int i = 0; i < r; ++i) {
        const json& row = rows.at(static_cast<std::size_t>(i));
        if (static_cast<int>(row.size()) != c)
            throw DataError("line " + std::to_string(line) + ": ragged " + what + " features");
        for (int j = 0; j < c; ++j) t.at(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
    }
    if (expect_cols >= 0 && c != expect_cols)
        throw DataError("line " + std::to_string(line) + ": " + what + " feature width " +
                        std::to_string(c) + " != " + std::to_string(expect_cols));
    return t;
}

}  // namespace

Dataset load_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    Dataset ds;
    std::string line;
    int line_no = 0;
    int node_width = -1, edge_width = -1;
    bool task_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError("line " + std::to_string(line_no) + ": malformed JSON (" + e.what() +
                            ")");
        }
        Graph g;
        try {
            g.id = obj.at("id").get<std::string>();
            g.node_features = tensor_from_rows(obj.at("nodes"), node_width, "node", line_no);
            if (g.num_nodes() == 0)
                throw DataError("line " + std::to_string(line_no) + ": graph has no nodes");
            node_width = g.node_features.cols();

            const json& edges = obj.at("edges");
            std::vector<double> feat_buf;
            for (const json& entry : edges) {
                if (entry.size() != 3)
                    throw DataError("line " + std::to_string(line_no) +
                                    ": edge entries must be [src,dst,[features]]");
                const int src = entry.at(0).get<int>();
                const int dst = entry.at(1).get<int>();
                const json& feats = entry.at(2);
                if (edge_width < 0) edge_width = static_cast<int>(feats.size());
                if (static_cast<int>(feats.size()) != edge_width)
                    throw DataError("line " + std::to_string(line_no) + ": edge feature width " +
                                    std::to_string(feats.size()) + " != " +
                                    std::to_string(edge_width));
                // Undirected on disk, directed in memory.
                g.edges.push_back(DirectedEdge{src, dst});
                g.edges.push_back(DirectedEdge{dst, src});
                for (const json& f : feats) feat_buf.push_back(f.get<double>());
            }
            const int e = static_cast<int>(g.edges.size());
            const int ew = edge_width < 0 ? 0 : edge_width;
            g.edge_features = Tensor(e, ew);
            for (int k = 0; k < e / 2; ++k)
                for (int j = 0; j < ew; ++j) {
                    const double v = feat_buf[static_cast<std::size_t>(k) * ew + j];
                    g.edge_features.at(2 * k, j) = v;
                    g.edge_features.at(2 * k + 1, j) = v;
                }

            if (obj.contains("label") && !obj.at("label").is_null()) {
                g.label = obj.at("label").get<double>();
                g.has_label = true;
            }
            const TaskKind task = task_from_name(obj.at("task").get<std::string>());
            if (!task_seen) {
                ds.task = task;
                task_seen = true;
            } else if (task != ds.task) {
                throw DataError("line " + std::to_string(line_no) + ": mixed task kinds");
            }
        } catch (const json::exception& e) {
            throw DataError("line " + std::to_string(line_no) + ": bad record (" + e.what() + ")");
        }
        if (g.has_label) {
            if (!std::isfinite(g.label))
                throw DataError("line " + std::to_string(line_no) + ": non-finite label");
            if (ds.task == TaskKind::Classification && g.label != 0.0 && g.label != 1.0)
                throw DataError("line " + std::to_string(line_no) +
                                ": classification label must be 0 or 1");
        }
        g.finalize();
        ds.graphs.push_back(std::move(g));
    }
    return ds;
}

void save_jsonl(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    for (const Graph& g : ds.graphs) {
        json obj;
        obj["id"] = g.id;
        json nodes = json::array();
        for (int i = 0; i < g.num_nodes(); ++i) {
            json row = json::array();
            for (int j = 0; j < g.node_features.cols(); ++j) row.push_back(g.node_features.at(i, j));
            nodes.push_back(std::move(row));
        }
        obj["nodes"] = std::move(nodes);
        json edges = json::array();
        for (int k = 0; k < g.num_edges(); ++k) {
            const DirectedEdge& de = g.edges[static_cast<std::size_t>(k)];
            if (de.src > de.dst) continue;  // one record per undirected edge
            json feats = json::array();
            for (int j = 0; j < g.edge_features.cols(); ++j)
                feats.push_back(g.edge_features.at(k, j));
            edges.push_back(json::array({de.src, de.dst, std::move(feats)}));
        }
        obj["edges"] = std::move(edges);
        if (g.has_label)
            obj["label"] = g.label;
        else
            obj["label"] = nullptr;
        obj["task"] = task_name(ds.task);
        out << obj.dump() << "\n";
    }
}

std::array<Dataset, 3> split(const Dataset& ds, const SplitSpec& spec) {
    if (ds.graphs.empty()) throw ConfigError("split: dataset is empty");
    if (!(spec.train > 0.0 && spec.valid > 0.0 && spec.test > 0.0))
        throw ConfigError("split: fractions must be positive");
    if (std::fabs(spec.train + spec.valid + spec.test - 1.0) > 1e-9)
        throw ConfigError("split: fractions must sum to 1");

    const int n = static_cast<int>(ds.graphs.size());
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(spec.seed);
    rng.shuffle(order);

    const int n_train = static_cast<int>(std::floor(spec.train * n));
    const int n_valid = static_cast<int>(std::floor(spec.valid * n));
    const int n_test = n - n_train - n_valid;
    if (n_train == 0 || n_valid == 0 || n_test == 0)
        throw ConfigError("split: a split would be empty with " + std::to_string(n) + " graphs");

    std::array<Dataset, 3> out;
    for (Dataset& d : out) d.task = ds.task;
    for (int i = 0; i < n; ++i) {
        const Graph& g = ds.graphs[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
        if (i < n_train)
            out[0].graphs.push_back(g);
        else if (i < n_train + n_valid)
            out[1].graphs.push_back(g);
        else
            out[2].graphs.push_back(g);
    }
    return out;
}

LabelStats standardize_labels(Dataset& train, std::vector<Dataset*> others) {
    if (train.task == TaskKind::Classification) return LabelStats{0.0, 1.0};
    double mean = 0.0;
    int count = 0;
    for (const Graph& g : train.graphs)
        if (g.has_label) {
            mean += g.label;
            ++count;
        }
    if (count == 0) throw ConfigError("standardize_labels: no labeled training graphs");
    mean /= count;
    double var = 0.0;
    for (const Graph& g : train.graphs)
        if (g.has_label) var += (g.label - mean) * (g.label - mean);
    const double std_dev = std::sqrt(var / count);
    if (std_dev < 1e-12) throw ConfigError("standardize_labels: zero-variance training labels");

    const auto apply = [&](Dataset& ds) {
        for (Graph& g : ds.graphs)
            if (g.has_label) g.label = (g.label - mean) / std_dev;
    };
    apply(train);
    for (Dataset* ds : others)
        if (ds) apply(*ds);
    return LabelStats{mean, std_dev};
}

std::vector<std::vector<int>> batches(const Dataset& ds, int batch_size, std::uint64_t seed,
                                      int epoch) {
    if (batch_size < 1) throw ConfigError("batches: batch_size must be >= 1");
    const int n = static_cast<int>(ds.graphs.size());
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng(seed).split(static_cast<std::uint64_t>(epoch));
    rng.shuffle(order);
    std::vector<std::vector<int>> out;
    for (int start = 0; start < n; start += batch_size) {
        const int end = std::min(n, start + batch_size);
        out.emplace_back(order.begin() + start, order.begin() + end);
    }
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

std::vector<CsvRow> read_smiles_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path + ": empty CSV");
    const std::vector<std::string> header = split_csv_line(line);
    int smiles_col = -1, label_col = -1;
    for (std::size_t k = 0; k < header.size(); ++k) {
        if (header[k] == "smiles") smiles_col = static_cast<int>(k);
        if (header[k] == "label") label_col = static_cast<int>(k);
    }
    if (smiles_col < 0 || label_col < 0)
        throw ConfigError(path + ": CSV header must name smiles and label columns");

    std::vector<CsvRow> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) <= std::max(smiles_col, label_col))
            throw DataError(path + ": line " + std::to_string(line_no) + " has too few fields");
        rows.push_back(CsvRow{fields[static_cast<std::size_t>(smiles_col)],
                              fields[static_cast<std::size_t>(label_col)], line_no});
    }
    return rows;
}

}  // namespace otgnn
