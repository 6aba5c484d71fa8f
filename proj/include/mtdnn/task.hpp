#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mtdnn/error.hpp"

namespace mtdnn {

enum class TaskType {
    single_classification,  // one sentence -> class distribution
    pair_classification,    // sentence pair -> class distribution (multi-step head)
    regression,             // sentence pair -> real score
    ranking,                // query + candidates -> relevance ordering
};

inline const char* task_type_name(TaskType t) {
    switch (t) {
        case TaskType::single_classification: return "single_classification";
        case TaskType::pair_classification: return "pair_classification";
        case TaskType::regression: return "regression";
        case TaskType::ranking: return "ranking";
    }
    throw ContractError("task_type_name: unknown task type");
}

inline TaskType task_type_from_name(const std::string& s) {
    if (s == "single_classification") return TaskType::single_classification;
    if (s == "pair_classification") return TaskType::pair_classification;
    if (s == "regression") return TaskType::regression;
    if (s == "ranking") return TaskType::ranking;
    throw ConfigError("unknown task type '" + s + "'");
}

struct TaskSpec {
    std::string name;
    TaskType type = TaskType::single_classification;
    // Class-label strings in index order; the stable string<->index mapping
    // used by the dataset files. Empty for regression and ranking.
    std::vector<std::string> labels;
    double dropout = 0.1;  // task-specific layer dropout
    std::string train_path, dev_path, test_path;
    std::vector<std::string> metrics;

    std::size_t n_labels() const { return labels.size(); }

    std::size_t label_index(const std::string& s) const {
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == s) return i;
        }
        throw ValidationError("task " + name + ": unknown label '" + s + "'");
    }

    bool is_classification() const {
        return type == TaskType::single_classification || type == TaskType::pair_classification;
    }

    void validate() const {
        if (name.empty()) throw ConfigError("task: empty name");
        if (is_classification() && labels.size() < 2) {
            throw ConfigError("task " + name + ": needs at least 2 labels");
        }
        if (!is_classification() && !labels.empty()) {
            throw ConfigError("task " + name + ": labels only apply to classification");
        }
        if (dropout < 0.0 || dropout >= 1.0) {
            throw ConfigError("task " + name + ": dropout outside [0, 1)");
        }
    }
};

}  // namespace mtdnn
