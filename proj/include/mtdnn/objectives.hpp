#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mtdnn/error.hpp"
#include "mtdnn/tensor.hpp"

namespace mtdnn {

// A scalar loss on the live graph plus bookkeeping for the step report.
struct LossValue {
    Tensor value;
    std::string task_name;
    std::size_t batch_size = 0;
};

// Mean over the batch of -log pred[target]; the log is floored at 1e-12 so a
// zero-probability target yields a large finite loss.
inline LossValue cross_entropy(Graph& g, const std::vector<Tensor>& pred_dists,
                               const std::vector<std::size_t>& targets) {
    if (pred_dists.empty() || pred_dists.size() != targets.size()) {
        throw InputError("cross_entropy: " + std::to_string(pred_dists.size()) +
                         " predictions vs " + std::to_string(targets.size()) + " targets");
    }
    Tensor acc;
    for (std::size_t i = 0; i < pred_dists.size(); ++i) {
        const Tensor& p = pred_dists[i];
        if (targets[i] >= p.numel()) {
            throw InputError("cross_entropy: target " + std::to_string(targets[i]) +
                             " out of range [0, " + std::to_string(p.numel()) + ")");
        }
        Tensor nll = scale(g, select(g, log_clamped(g, p, 1e-12), targets[i]), -1.0);
        acc = i == 0 ? nll : add(g, acc, nll);
    }
    return {scale(g, acc, 1.0 / static_cast<double>(pred_dists.size())), "", pred_dists.size()};
}

// Mean over the batch of (y - score)^2.
inline LossValue mse(Graph& g, const std::vector<Tensor>& scores,
                     const std::vector<double>& targets) {
    if (scores.empty() || scores.size() != targets.size()) {
        throw InputError("mse: " + std::to_string(scores.size()) + " scores vs " +
                         std::to_string(targets.size()) + " targets");
    }
    Tensor acc;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        Tensor diff = sub(g, Tensor::scalar(targets[i]), scores[i]);
        Tensor sq = mul(g, diff, diff);
        acc = i == 0 ? sq : add(g, acc, sq);
    }
    return {scale(g, acc, 1.0 / static_cast<double>(scores.size())), "", scores.size()};
}

// One query's candidate relevance scores with the position of its positive.
struct RankedGroup {
    std::vector<Tensor> scores;  // scalar relevance per candidate
    std::size_t positive = 0;
};

// Mean over queries of -log( exp(gamma*score+) / sum_A exp(gamma*score) );
// the normalizer runs over the whole candidate set including the positive.
inline LossValue ranking_nll(Graph& g, const std::vector<RankedGroup>& groups, double gamma) {
    if (groups.empty()) throw InputError("ranking_nll: no queries");
    if (gamma <= 0.0) throw ConfigError("ranking_nll: gamma must be positive");
    Tensor acc;
    for (std::size_t qi = 0; qi < groups.size(); ++qi) {
        const RankedGroup& q = groups[qi];
        if (q.scores.size() < 2) {
            throw InputError("ranking_nll: query needs at least 2 candidates, got " +
                             std::to_string(q.scores.size()));
        }
        if (q.positive >= q.scores.size()) {
            throw InputError("ranking_nll: positive index " + std::to_string(q.positive) +
                             " out of range [0, " + std::to_string(q.scores.size()) + ")");
        }
        Tensor scores = concat(g, q.scores, 0);  // length |A|
        Tensor p = softmax(g, scale(g, scores, gamma), 0);
        Tensor nll = scale(g, select(g, log_clamped(g, p, 1e-12), q.positive), -1.0);
        acc = qi == 0 ? nll : add(g, acc, nll);
    }
    return {scale(g, acc, 1.0 / static_cast<double>(groups.size())), "", groups.size()};
}

}  // namespace mtdnn
