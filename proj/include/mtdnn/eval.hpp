#pragma once

#include <string>
#include <vector>

#include "mtdnn/error.hpp"
#include "mtdnn/metrics.hpp"
#include "mtdnn/model.hpp"

namespace mtdnn {

inline bool metric_valid_for(TaskType type, const std::string& name) {
    switch (type) {
        case TaskType::single_classification:
        case TaskType::pair_classification:
            return name == "accuracy" || name == "f1" || name == "mcc";
        case TaskType::regression:
            return name == "pearson" || name == "spearman";
        case TaskType::ranking:
            return name == "accuracy";  // fraction of queries with the positive ranked first
    }
    return false;
}

inline std::vector<std::string> default_metrics(TaskType type) {
    switch (type) {
        case TaskType::single_classification:
        case TaskType::pair_classification:
        case TaskType::ranking:
            return {"accuracy"};
        case TaskType::regression:
            return {"pearson", "spearman"};
    }
    throw ContractError("default_metrics: unknown task type");
}

inline void validate_task_metrics(const TaskSpec& spec) {
    if (spec.metrics.empty()) {
        throw ConfigError("task '" + spec.name + "': no metrics declared");
    }
    for (const std::string& metric : spec.metrics) {
        if (!metric_valid_for(spec.type, metric)) {
            throw ConfigError("task '" + spec.name + "': metric '" + metric +
                              "' does not apply to " + task_type_name(spec.type) + " tasks");
        }
        if ((metric == "f1" || metric == "mcc") && spec.n_labels() != 2) {
            throw ConfigError("task '" + spec.name + "': metric '" + metric +
                              "' needs exactly 2 labels");
        }
    }
}

// Scores every example of one split with the task's declared metrics.
// Evaluation is deterministic: no dropout, no rng influence.
inline EvalReport evaluate_task(Model& m, std::size_t task_idx, const DatasetSplit& data) {
    const TaskSpec& spec = detail::checked_task(m, task_idx);
    validate_task_metrics(spec);
    if (data.examples.empty()) {
        throw InputError("evaluate: no examples for task '" + spec.name + "'");
    }
    for (const Example& ex : data.examples) {
        if (!example_matches(ex, spec.type)) {
            throw ContractError("evaluate: task '" + spec.name +
                                "' got the wrong example kind");
        }
    }
    EvalReport report;
    report.task_name = spec.name;
    report.n_examples = data.examples.size();
    switch (spec.type) {
        case TaskType::single_classification:
        case TaskType::pair_classification: {
            std::vector<std::size_t> pred, gold;
            for (const Example& ex : data.examples) {
                pred.push_back(predict_class(m, task_idx, ex));
                if (const auto* s = std::get_if<SingleSentence>(&ex)) {
                    gold.push_back(s->label);
                } else {
                    gold.push_back(std::get<PairSentence>(ex).label);
                }
            }
            for (const std::string& metric : spec.metrics) {
                double value = 0.0;
                if (metric == "accuracy") {
                    value = accuracy(pred, gold);
                } else if (metric == "f1") {
                    value = f1_binary(pred, gold, 1);
                } else {
                    value = matthews_corr(pred, gold);
                }
                report.metrics.emplace_back(metric, value);
            }
            break;
        }
        case TaskType::regression: {
            std::vector<double> pred, gold;
            for (const Example& ex : data.examples) {
                pred.push_back(predict_value(m, task_idx, ex));
                gold.push_back(std::get<RegressionPair>(ex).y);
            }
            for (const std::string& metric : spec.metrics) {
                const double value = metric == "pearson" ? pearson(pred, gold)
                                                         : spearman(pred, gold);
                report.metrics.emplace_back(metric, value);
            }
            break;
        }
        case TaskType::ranking: {
            std::size_t top_hits = 0;
            for (const Example& ex : data.examples) {
                const auto& q = std::get<RankingQuery>(ex);
                const std::vector<std::size_t> order = rank_candidates(m, task_idx, q);
                if (q.candidates.at(order.front()).is_positive) ++top_hits;
            }
            const double p_at_1 =
                static_cast<double>(top_hits) / static_cast<double>(data.examples.size());
            for (const std::string& metric : spec.metrics) {
                (void)metric;
                report.metrics.emplace_back("accuracy", p_at_1);
            }
            break;
        }
    }
    return report;
}

}  // namespace mtdnn
