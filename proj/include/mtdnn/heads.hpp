#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "mtdnn/error.hpp"
#include "mtdnn/rng.hpp"
#include "mtdnn/tensor.hpp"

namespace mtdnn {

namespace detail {

// v (length d) times W (d x n) as a length-n vector.
inline Tensor vecmat(Graph& g, const Tensor& v, const Tensor& w) {
    return reshape(g, matmul(g, reshape(g, v, {1, v.numel()}), w), {w.extent(1)});
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Single-sentence classification: softmax over W^T x.
// ---------------------------------------------------------------------------

struct ClassificationHead {
    Tensor w;  // d x n_labels

    static ClassificationHead init(std::size_t d, std::size_t n_labels, Rng& rng) {
        if (n_labels < 2) throw ConfigError("classification head: need at least 2 labels");
        return {Tensor::randn({d, n_labels}, rng, 0.02, true)};
    }

    void for_each_param(const std::string& prefix,
                        const std::function<void(const std::string&, Tensor&)>& fn) {
        fn(prefix + "w", w);
    }
};

inline Tensor classify_single(Graph& g, const Tensor& x, const ClassificationHead& head) {
    return softmax(g, detail::vecmat(g, x, head.w), 0);
}

// ---------------------------------------------------------------------------
// Similarity scoring: unbounded w^T x.
// ---------------------------------------------------------------------------

struct SimilarityHead {
    Tensor w;  // d

    static SimilarityHead init(std::size_t d, Rng& rng) {
        return {Tensor::randn({d}, rng, 0.02, true)};
    }

    void for_each_param(const std::string& prefix,
                        const std::function<void(const std::string&, Tensor&)>& fn) {
        fn(prefix + "w", w);
    }
};

inline Tensor similarity(Graph& g, const Tensor& x, const SimilarityHead& head) {
    return dot(g, head.w, x);
}

// ---------------------------------------------------------------------------
// Relevance scoring: sigmoid(w^T x) in (0, 1).
// ---------------------------------------------------------------------------

struct RankingHead {
    Tensor w;  // d

    static RankingHead init(std::size_t d, Rng& rng) {
        return {Tensor::randn({d}, rng, 0.02, true)};
    }

    void for_each_param(const std::string& prefix,
                        const std::function<void(const std::string&, Tensor&)>& fn) {
        fn(prefix + "w", w);
    }
};

inline Tensor relevance(Graph& g, const Tensor& x, const RankingHead& head) {
    return sigmoid(g, dot(g, head.w, x));
}

// Indices of `scores` in descending order; ties keep original order.
inline std::vector<std::size_t> rank_by_score(const std::vector<double>& scores) {
    if (scores.empty()) throw InputError("rank_by_score: no candidates");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

// ---------------------------------------------------------------------------
// GRU cell (update/reset gates), state and input both length d.
// ---------------------------------------------------------------------------

struct GruParams {
    Tensor wr, ur, br;  // reset gate
    Tensor wz, uz, bz;  // update gate
    Tensor wn, un, bn;  // candidate state

    static GruParams init(std::size_t d, Rng& rng) {
        const double sd = 0.02;
        GruParams p;
        p.wr = Tensor::randn({d, d}, rng, sd, true);
        p.ur = Tensor::randn({d, d}, rng, sd, true);
        p.br = Tensor::zeros({d}, true);
        p.wz = Tensor::randn({d, d}, rng, sd, true);
        p.uz = Tensor::randn({d, d}, rng, sd, true);
        p.bz = Tensor::zeros({d}, true);
        p.wn = Tensor::randn({d, d}, rng, sd, true);
        p.un = Tensor::randn({d, d}, rng, sd, true);
        p.bn = Tensor::zeros({d}, true);
        return p;
    }

    void for_each_param(const std::string& prefix,
                        const std::function<void(const std::string&, Tensor&)>& fn) {
        fn(prefix + "reset.w", wr);
        fn(prefix + "reset.u", ur);
        fn(prefix + "reset.b", br);
        fn(prefix + "update.w", wz);
        fn(prefix + "update.u", uz);
        fn(prefix + "update.b", bz);
        fn(prefix + "cand.w", wn);
        fn(prefix + "cand.u", un);
        fn(prefix + "cand.b", bn);
    }
};

inline Tensor gru_cell(Graph& g, const GruParams& p, const Tensor& h, const Tensor& x) {
    using detail::vecmat;
    Tensor r = sigmoid(g, add(g, add(g, vecmat(g, x, p.wr), vecmat(g, h, p.ur)), p.br));
    Tensor z = sigmoid(g, add(g, add(g, vecmat(g, x, p.wz), vecmat(g, h, p.uz)), p.bz));
    Tensor n = tanh(g, add(g, add(g, vecmat(g, x, p.wn), vecmat(g, mul(g, r, h), p.un)), p.bn));
    return add(g, mul(g, z, h), mul(g, one_minus(g, z), n));
}

// ---------------------------------------------------------------------------
// Multi-step pairwise classifier over premise/hypothesis memories.
// ---------------------------------------------------------------------------

struct SanHead {
    Tensor w1;  // d, initial-state attention over the hypothesis memory
    Tensor w2;  // d x d, premise attention bilinear map
    GruParams gru;
    Tensor w3;  // 4d x n_labels, step classifier over [s; x; |s-x|; s*x]
    std::size_t k_steps = 5;
    double pred_dropout = 0.1;  // whole-step prediction dropout while training

    static SanHead init(std::size_t d, std::size_t n_labels, std::size_t k_steps,
                        double pred_dropout, Rng& rng) {
        if (n_labels < 2) throw ConfigError("pairwise head: need at least 2 labels");
        if (k_steps < 1) throw ConfigError("pairwise head: need at least 1 step");
        if (pred_dropout < 0.0 || pred_dropout >= 1.0) {
            throw ConfigError("pairwise head: prediction dropout outside [0, 1)");
        }
        SanHead h;
        h.w1 = Tensor::randn({d}, rng, 0.02, true);
        h.w2 = Tensor::randn({d, d}, rng, 0.02, true);
        h.gru = GruParams::init(d, rng);
        h.w3 = Tensor::randn({4 * d, n_labels}, rng, 0.02, true);
        h.k_steps = k_steps;
        h.pred_dropout = pred_dropout;
        return h;
    }

    void for_each_param(const std::string& prefix,
                        const std::function<void(const std::string&, Tensor&)>& fn) {
        fn(prefix + "attn_init.w", w1);
        fn(prefix + "attn_premise.w", w2);
        gru.for_each_param(prefix + "gru.", fn);
        fn(prefix + "step_classifier.w", w3);
    }
};

// Per-step internals of one multi-step forward pass.
struct SanTrace {
    Tensor alpha;  // hypothesis attention, length n
    struct Step {
        Tensor beta;  // premise attention, length m
        Tensor x;     // attended premise summary, length d
        Tensor s;     // reasoning state, length d
        Tensor p;     // step distribution, length n_labels
    };
    std::vector<Step> steps;
    std::vector<bool> kept;  // which steps entered the average
};

// K-step reasoning over premise memory m_p (m x d) and hypothesis memory m_h
// (n x d). Each step attends over the premise, refreshes the GRU state (from
// step 1 on) and classifies [s; x; |s-x|; s*x]. Training averages the
// surviving step distributions after whole-step dropout, keeping all steps
// when every one was dropped; evaluation averages all steps.
inline Tensor san_forward(Graph& g, const Tensor& m_p, const Tensor& m_h, const SanHead& head,
                          bool training, Rng& rng, SanTrace* trace = nullptr) {
    detail::require_rank("san_forward", m_p, 2);
    detail::require_rank("san_forward", m_h, 2);
    if (m_p.extent(0) == 0 || m_h.extent(0) == 0) throw InputError("san_forward: empty memory");
    const std::size_t d = m_p.extent(1);
    if (m_h.extent(1) != d) {
        throw DimensionError("san_forward: memory widths differ, " + shape_str(m_p.shape()) +
                             " vs " + shape_str(m_h.shape()));
    }
    using detail::vecmat;
    const std::size_t m = m_p.extent(0), n = m_h.extent(0);

    Tensor alpha = softmax(g, reshape(g, matmul(g, m_h, reshape(g, head.w1, {d, 1})), {n}), 0);
    Tensor s = reshape(g, matmul(g, reshape(g, alpha, {1, n}), m_h), {d});
    if (trace) {
        trace->alpha = alpha;
        trace->steps.clear();
        trace->kept.clear();
    }

    std::vector<Tensor> step_dists;
    for (std::size_t k = 0; k < head.k_steps; ++k) {
        Tensor probe = vecmat(g, s, transpose(g, head.w2));
        Tensor beta = softmax(g, reshape(g, matmul(g, m_p, reshape(g, probe, {d, 1})), {m}), 0);
        Tensor x = reshape(g, matmul(g, reshape(g, beta, {1, m}), m_p), {d});
        if (k >= 1) s = gru_cell(g, head.gru, s, x);
        Tensor feat = concat(g, {s, x, abs(g, sub(g, s, x)), mul(g, s, x)}, 0);
        Tensor p = softmax(g, vecmat(g, feat, head.w3), 0);
        step_dists.push_back(p);
        if (trace) trace->steps.push_back({beta, x, s, p});
    }

    std::vector<bool> kept(head.k_steps, true);
    if (training && head.pred_dropout > 0.0) {
        bool any = false;
        for (std::size_t k = 0; k < head.k_steps; ++k) {
            kept[k] = rng.uniform() >= head.pred_dropout;
            any = any || kept[k];
        }
        if (!any) kept.assign(head.k_steps, true);  // never emit an empty average
    }
    if (trace) trace->kept = kept;

    Tensor acc;
    std::size_t n_kept = 0;
    for (std::size_t k = 0; k < head.k_steps; ++k) {
        if (!kept[k]) continue;
        acc = n_kept == 0 ? step_dists[k] : add(g, acc, step_dists[k]);
        ++n_kept;
    }
    return n_kept == 1 ? acc : scale(g, acc, 1.0 / static_cast<double>(n_kept));
}

}  // namespace mtdnn
