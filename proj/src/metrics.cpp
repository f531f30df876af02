#include "otgnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "otgnn/errors.hpp"

namespace otgnn {

double rmse(std::span<const double> predictions, std::span<const double> labels) {
    if (predictions.size() != labels.size() || predictions.empty())
        throw MetricError("rmse: need equally sized, nonempty inputs");
    double acc = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - labels[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(predictions.size()));
}

namespace {

// Average ranks (1-based), ties averaged.
std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const double> labels01) {
    if (scores.size() != labels01.size() || scores.empty())
        throw MetricError("roc_auc: need equally sized, nonempty inputs");
    std::size_t n_pos = 0;
    for (double y : labels01) {
        if (y != 0.0 && y != 1.0) throw MetricError("roc_auc: labels must be 0 or 1");
        if (y == 1.0) ++n_pos;
    }
    const std::size_t n_neg = labels01.size() - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw MetricError("roc_auc: undefined with a single class in the labels");
    const std::vector<double> ranks = average_ranks(scores);
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (labels01[i] == 1.0) rank_sum += ranks[i];
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw MetricError("pearson: need at least two paired samples");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0)
        throw MetricError("pearson: undefined correlation for zero-variance input");
    return sxy / std::sqrt(sxx * syy);
}

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw MetricError("spearman: need at least two paired samples");
    const std::vector<double> rx = average_ranks(x);
    const std::vector<double> ry = average_ranks(y);
    return pearson(rx, ry);
}

CorrelationReport correlation_analysis(const Tensor& embeddings,
                                       std::span<const double> labels) {
    const int n = embeddings.rows();
    if (n < 2 || static_cast<std::size_t>(n) != labels.size())
        throw MetricError("correlation_analysis: need >= 2 labeled points");
    std::vector<double> dist, gap;
    dist.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    gap.reserve(dist.capacity());
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double d2 = 0.0;
            for (int k = 0; k < embeddings.cols(); ++k) {
                const double d = embeddings.at(i, k) - embeddings.at(j, k);
                d2 += d * d;
            }
            dist.push_back(std::sqrt(d2));
            gap.push_back(std::fabs(labels[static_cast<std::size_t>(i)] -
                                    labels[static_cast<std::size_t>(j)]));
        }
    }
    return CorrelationReport{spearman(dist, gap), pearson(dist, gap)};
}

}  // namespace otgnn
