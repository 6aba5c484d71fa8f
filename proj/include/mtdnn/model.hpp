#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mtdnn/checkpoint.hpp"
#include "mtdnn/data.hpp"
#include "mtdnn/encoder.hpp"
#include "mtdnn/error.hpp"
#include "mtdnn/heads.hpp"
#include "mtdnn/objectives.hpp"
#include "mtdnn/task.hpp"

namespace mtdnn {

struct ModelConfig {
    std::size_t d = 64;
    std::size_t n_layers = 2;
    std::size_t n_heads = 2;
    std::size_t ffn_multiplier = 4;
    std::size_t k_steps = 5;  // reasoning steps of the pairwise head
    std::size_t max_len = 512;

    void validate() const {
        if (d < 1) throw ConfigError("model: d must be positive");
        if (n_layers < 1) throw ConfigError("model: n_layers must be at least 1");
        if (n_heads < 1) throw ConfigError("model: n_heads must be at least 1");
        if (d % n_heads != 0) {
            throw ConfigError("model: d=" + std::to_string(d) + " not divisible by n_heads=" +
                              std::to_string(n_heads));
        }
        if (ffn_multiplier < 1) throw ConfigError("model: ffn_multiplier must be at least 1");
        if (k_steps < 1) throw ConfigError("model: k_steps must be at least 1");
        if (max_len < 3 || max_len > 512) {
            throw ConfigError("model: max_len must be in [3, 512]");
        }
    }
};

using TaskHead = std::variant<ClassificationHead, SanHead, SimilarityHead, RankingHead>;

// Shared encoder plus one head per registered task.
struct Model {
    ModelConfig cfg;
    Vocabulary vocab;
    std::vector<TaskSpec> tasks;
    EncoderParams encoder;
    std::vector<TaskHead> heads;

    static Model init(ModelConfig cfg, Vocabulary vocab, std::vector<TaskSpec> tasks, Rng& rng) {
        cfg.validate();
        if (tasks.empty()) throw ConfigError("model: no tasks registered");
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            tasks[i].validate();
            for (std::size_t j = 0; j < i; ++j) {
                if (tasks[j].name == tasks[i].name) {
                    throw ConfigError("model: duplicate task name '" + tasks[i].name + "'");
                }
            }
        }
        Model m;
        m.cfg = cfg;
        m.vocab = std::move(vocab);
        m.tasks = std::move(tasks);
        m.encoder = EncoderParams::init(m.vocab.size(), cfg.d, cfg.n_layers, cfg.n_heads,
                                        cfg.max_len, rng, cfg.ffn_multiplier);
        for (const TaskSpec& t : m.tasks) {
            switch (t.type) {
                case TaskType::single_classification:
                    m.heads.emplace_back(ClassificationHead::init(cfg.d, t.n_labels(), rng));
                    break;
                case TaskType::pair_classification:
                    m.heads.emplace_back(
                        SanHead::init(cfg.d, t.n_labels(), cfg.k_steps, t.dropout, rng));
                    break;
                case TaskType::regression:
                    m.heads.emplace_back(SimilarityHead::init(cfg.d, rng));
                    break;
                case TaskType::ranking:
                    m.heads.emplace_back(RankingHead::init(cfg.d, rng));
                    break;
            }
        }
        return m;
    }

    std::size_t task_index(const std::string& name) const {
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            if (tasks[i].name == name) return i;
        }
        throw ConfigError("model: unknown task '" + name + "'");
    }

    // Encoder parameters first, then each task's head parameters, in
    // registration order. Names are stable across runs and checkpoints.
    NamedTensors named_params() {
        NamedTensors out;
        auto collect = [&out](const std::string& name, Tensor& t) { out.emplace_back(name, t); };
        encoder.for_each_param("encoder.", collect);
        for (std::size_t i = 0; i < heads.size(); ++i) {
            const std::string prefix = "head." + tasks[i].name + ".";
            std::visit([&](auto& head) { head.for_each_param(prefix, collect); }, heads[i]);
        }
        return out;
    }

    NamedTensors encoder_params() {
        NamedTensors out;
        encoder.for_each_param("encoder.",
                               [&out](const std::string& n, Tensor& t) { out.emplace_back(n, t); });
        return out;
    }
};

namespace detail {

inline const TaskSpec& checked_task(const Model& m, std::size_t task_idx) {
    if (task_idx >= m.tasks.size()) throw ContractError("model: task index out of range");
    return m.tasks[task_idx];
}

template <typename T>
const T& example_as(const Example& ex, const char* task_name) {
    const T* typed = std::get_if<T>(&ex);
    if (!typed) {
        throw ContractError(std::string("model: example kind does not match task '") + task_name +
                            "'");
    }
    return *typed;
}

}  // namespace detail

// Tokenizes, packs and runs the shared encoder over one text (or text pair).
inline std::pair<PackedInput, Tensor> encode_text(Graph& g, Model& m, const std::string& text_a,
                                                  const std::string* text_b, bool training,
                                                  Rng& rng) {
    const std::vector<std::size_t> ids_a = tokenize(text_a, m.vocab);
    std::optional<std::vector<std::size_t>> ids_b;
    if (text_b) ids_b = tokenize(*text_b, m.vocab);
    PackedInput packed = pack(ids_a, ids_b, m.vocab, m.cfg.max_len);
    Tensor l1 = lexicon_encode(g, packed, m.encoder);
    Tensor contextual = transformer_encode(g, l1, m.encoder, training, rng);
    return {std::move(packed), std::move(contextual)};
}

// Pooled [CLS] representation with the task's head-input dropout in training.
inline Tensor pooled_input(Graph& g, Model& m, std::size_t task_idx, const Tensor& contextual,
                           bool training, Rng& rng) {
    const TaskSpec& spec = detail::checked_task(m, task_idx);
    Tensor x = cls_vector(g, contextual);
    return dropout(g, x, spec.dropout, training, rng);
}

inline Tensor single_forward(Graph& g, Model& m, std::size_t task_idx, const SingleSentence& ex,
                             bool training, Rng& rng) {
    auto [packed, contextual] = encode_text(g, m, ex.text, nullptr, training, rng);
    Tensor x = pooled_input(g, m, task_idx, contextual, training, rng);
    return classify_single(g, x, std::get<ClassificationHead>(m.heads[task_idx]));
}

inline Tensor pair_forward(Graph& g, Model& m, std::size_t task_idx, const PairSentence& ex,
                           bool training, Rng& rng, SanTrace* trace = nullptr) {
    auto [packed, contextual] = encode_text(g, m, ex.text_a, &ex.text_b, training, rng);
    // contextual rows: [CLS], a tokens, [SEP], b tokens, [SEP]
    Tensor premise = slice_rows(g, contextual, 1, packed.len_a);
    Tensor hypothesis = slice_rows(g, contextual, 2 + packed.len_a, packed.len_b);
    return san_forward(g, premise, hypothesis, std::get<SanHead>(m.heads[task_idx]), training, rng,
                       trace);
}

inline Tensor regression_forward(Graph& g, Model& m, std::size_t task_idx,
                                 const RegressionPair& ex, bool training, Rng& rng) {
    auto [packed, contextual] = encode_text(g, m, ex.text_a, &ex.text_b, training, rng);
    Tensor x = pooled_input(g, m, task_idx, contextual, training, rng);
    return similarity(g, x, std::get<SimilarityHead>(m.heads[task_idx]));
}

inline Tensor relevance_forward(Graph& g, Model& m, std::size_t task_idx, const std::string& query,
                                const std::string& candidate, bool training, Rng& rng) {
    auto [packed, contextual] = encode_text(g, m, query, &candidate, training, rng);
    Tensor x = pooled_input(g, m, task_idx, contextual, training, rng);
    return relevance(g, x, std::get<RankingHead>(m.heads[task_idx]));
}

// Mean loss of one single-task batch under the task's objective.
inline LossValue batch_loss(Graph& g, Model& m, std::size_t task_idx,
                            std::span<const Example> batch, bool training, Rng& rng,
                            double gamma) {
    const TaskSpec& spec = detail::checked_task(m, task_idx);
    if (batch.empty()) throw InputError("batch_loss: empty batch");
    LossValue out;
    switch (spec.type) {
        case TaskType::single_classification: {
            std::vector<Tensor> dists;
            std::vector<std::size_t> targets;
            for (const Example& ex : batch) {
                const auto& s = detail::example_as<SingleSentence>(ex, spec.name.c_str());
                dists.push_back(single_forward(g, m, task_idx, s, training, rng));
                targets.push_back(s.label);
            }
            out = cross_entropy(g, dists, targets);
            break;
        }
        case TaskType::pair_classification: {
            std::vector<Tensor> dists;
            std::vector<std::size_t> targets;
            for (const Example& ex : batch) {
                const auto& p = detail::example_as<PairSentence>(ex, spec.name.c_str());
                dists.push_back(pair_forward(g, m, task_idx, p, training, rng));
                targets.push_back(p.label);
            }
            out = cross_entropy(g, dists, targets);
            break;
        }
        case TaskType::regression: {
            std::vector<Tensor> scores;
            std::vector<double> targets;
            for (const Example& ex : batch) {
                const auto& r = detail::example_as<RegressionPair>(ex, spec.name.c_str());
                scores.push_back(regression_forward(g, m, task_idx, r, training, rng));
                targets.push_back(r.y);
            }
            out = mse(g, scores, targets);
            break;
        }
        case TaskType::ranking: {
            std::vector<RankedGroup> groups;
            for (const Example& ex : batch) {
                const auto& q = detail::example_as<RankingQuery>(ex, spec.name.c_str());
                RankedGroup group;
                group.positive = q.candidates.size();
                for (std::size_t c = 0; c < q.candidates.size(); ++c) {
                    group.scores.push_back(relevance_forward(g, m, task_idx, q.query,
                                                             q.candidates[c].text, training, rng));
                    if (q.candidates[c].is_positive) group.positive = c;
                }
                if (group.positive == q.candidates.size()) {
                    throw ValidationError("batch_loss: query '" + q.query_id +
                                          "' has no positive candidate");
                }
                groups.push_back(std::move(group));
            }
            out = ranking_nll(g, groups, gamma);
            break;
        }
    }
    out.task_name = spec.name;
    out.batch_size = batch.size();
    return out;
}

// Evaluation-mode helpers; deterministic, no dropout.

inline std::size_t predict_class(Model& m, std::size_t task_idx, const Example& ex) {
    const TaskSpec& spec = detail::checked_task(m, task_idx);
    Graph g;
    Rng rng(0);
    Tensor dist;
    if (spec.type == TaskType::single_classification) {
        dist = single_forward(g, m, task_idx,
                              detail::example_as<SingleSentence>(ex, spec.name.c_str()), false,
                              rng);
    } else if (spec.type == TaskType::pair_classification) {
        dist = pair_forward(g, m, task_idx,
                            detail::example_as<PairSentence>(ex, spec.name.c_str()), false, rng);
    } else {
        throw ContractError("predict_class: task '" + spec.name + "' is not classification");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < dist.numel(); ++i) {
        if (dist.at(i) > dist.at(best)) best = i;
    }
    return best;
}

inline double predict_value(Model& m, std::size_t task_idx, const Example& ex) {
    const TaskSpec& spec = detail::checked_task(m, task_idx);
    if (spec.type != TaskType::regression) {
        throw ContractError("predict_value: task '" + spec.name + "' is not regression");
    }
    Graph g;
    Rng rng(0);
    return regression_forward(g, m, task_idx,
                              detail::example_as<RegressionPair>(ex, spec.name.c_str()), false,
                              rng)
        .value();
}

// Candidate indices in descending relevance order; ties keep input order.
inline std::vector<std::size_t> rank_candidates(Model& m, std::size_t task_idx,
                                                const RankingQuery& query) {
    const TaskSpec& spec = detail::checked_task(m, task_idx);
    if (spec.type != TaskType::ranking) {
        throw ContractError("rank_candidates: task '" + spec.name + "' is not ranking");
    }
    if (query.candidates.empty()) throw InputError("rank_candidates: no candidates");
    std::vector<double> scores;
    Rng rng(0);
    for (const RankingCandidate& c : query.candidates) {
        Graph g;
        scores.push_back(
            relevance_forward(g, m, task_idx, query.query, c.text, false, rng).value());
    }
    return rank_by_score(scores);
}

}  // namespace mtdnn
