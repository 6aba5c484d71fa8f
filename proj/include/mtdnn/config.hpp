#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mtdnn/error.hpp"
#include "mtdnn/eval.hpp"
#include "mtdnn/model.hpp"
#include "mtdnn/optimizer.hpp"
#include "mtdnn/task.hpp"

namespace mtdnn {

// A full run description parsed from the sectioned key=value config text:
// one [model] section, an optional [training] section and one [task NAME]
// section per task. Seeds and output directories are command-line flags,
// never config keys.
struct RunConfig {
    ModelConfig model;
    std::string vocab_path;
    TrainConfig training;
    std::vector<TaskSpec> tasks;

    const TaskSpec& task(const std::string& name) const {
        for (const TaskSpec& t : tasks) {
            if (t.name == name) return t;
        }
        throw ConfigError("config: no task named '" + name + "'");
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline ConfigError config_error(std::size_t line_no, const std::string& what) {
    return ConfigError("config line " + std::to_string(line_no) + ": " + what);
}

inline std::size_t parse_size(const std::string& key, const std::string& value,
                              std::size_t line_no) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(value, &used);
        if (used != value.size() || value.front() == '-') throw std::invalid_argument("");
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw config_error(line_no, "key '" + key + "': '" + value + "' is not a count");
    }
}

inline double parse_double(const std::string& key, const std::string& value,
                           std::size_t line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw config_error(line_no, "key '" + key + "': '" + value + "' is not a number");
    }
}

inline bool parse_bool(const std::string& key, const std::string& value, std::size_t line_no) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw config_error(line_no, "key '" + key + "': '" + value + "' is not true/false");
}

inline std::vector<std::string> parse_list(const std::string& key, const std::string& value,
                                           std::size_t line_no) {
    std::vector<std::string> items;
    std::size_t start = 0;
    while (start <= value.size()) {
        const std::size_t comma = value.find(',', start);
        const std::string item =
            trim(value.substr(start, comma == std::string::npos ? comma : comma - start));
        if (item.empty()) {
            throw config_error(line_no, "key '" + key + "': empty list item");
        }
        items.push_back(item);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return items;
}

}  // namespace detail

inline RunConfig parse_run_config(const std::string& text) {
    RunConfig cfg;
    enum class Section { none, model, training, task };
    Section section = Section::none;
    std::size_t task_idx = 0;
    bool saw_model = false, saw_training = false;
    std::vector<bool> task_has_type;
    std::set<std::string> seen_keys;  // "<section>\x1f<key>"

    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    std::string section_tag;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = detail::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw detail::config_error(line_no, "unterminated section header");
            const std::string name = detail::trim(line.substr(1, line.size() - 2));
            if (name == "model") {
                if (saw_model) throw detail::config_error(line_no, "duplicate [model] section");
                saw_model = true;
                section = Section::model;
                section_tag = "model";
            } else if (name == "training") {
                if (saw_training) {
                    throw detail::config_error(line_no, "duplicate [training] section");
                }
                saw_training = true;
                section = Section::training;
                section_tag = "training";
            } else if (name.rfind("task ", 0) == 0) {
                const std::string task_name = detail::trim(name.substr(5));
                if (task_name.empty()) {
                    throw detail::config_error(line_no, "task section without a name");
                }
                for (const TaskSpec& t : cfg.tasks) {
                    if (t.name == task_name) {
                        throw detail::config_error(line_no,
                                                   "duplicate task '" + task_name + "'");
                    }
                }
                TaskSpec spec;
                spec.name = task_name;
                cfg.tasks.push_back(std::move(spec));
                task_has_type.push_back(false);
                task_idx = cfg.tasks.size() - 1;
                section = Section::task;
                section_tag = "task " + task_name;
            } else {
                throw detail::config_error(line_no, "unknown section '" + name + "'");
            }
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw detail::config_error(line_no, "expected key = value, got '" + line + "'");
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw detail::config_error(line_no, "empty key");
        if (section == Section::none) {
            throw detail::config_error(line_no, "key '" + key + "' outside any section");
        }
        if (!seen_keys.insert(section_tag + '\x1f' + key).second) {
            throw detail::config_error(line_no, "duplicate key '" + key + "' in [" +
                                                    section_tag + "]");
        }
        if (section == Section::model) {
            if (key == "d") {
                cfg.model.d = detail::parse_size(key, value, line_no);
            } else if (key == "n_layers") {
                cfg.model.n_layers = detail::parse_size(key, value, line_no);
            } else if (key == "n_heads") {
                cfg.model.n_heads = detail::parse_size(key, value, line_no);
            } else if (key == "ffn_multiplier") {
                cfg.model.ffn_multiplier = detail::parse_size(key, value, line_no);
            } else if (key == "k_steps") {
                cfg.model.k_steps = detail::parse_size(key, value, line_no);
            } else if (key == "max_len") {
                cfg.model.max_len = detail::parse_size(key, value, line_no);
            } else if (key == "vocab") {
                cfg.vocab_path = value;
            } else {
                throw detail::config_error(line_no, "unknown key '" + key + "' in [model]");
            }
        } else if (section == Section::training) {
            if (key == "lr_peak") {
                cfg.training.lr_peak = detail::parse_double(key, value, line_no);
            } else if (key == "batch_size") {
                cfg.training.batch_size = detail::parse_size(key, value, line_no);
            } else if (key == "epochs") {
                cfg.training.epochs = detail::parse_size(key, value, line_no);
            } else if (key == "warmup_fraction") {
                cfg.training.warmup_fraction = detail::parse_double(key, value, line_no);
            } else if (key == "clip_norm") {
                cfg.training.clip_norm = detail::parse_double(key, value, line_no);
            } else if (key == "adamax_beta1") {
                cfg.training.adamax_beta1 = detail::parse_double(key, value, line_no);
            } else if (key == "adamax_beta2") {
                cfg.training.adamax_beta2 = detail::parse_double(key, value, line_no);
            } else if (key == "adamax_eps") {
                cfg.training.adamax_eps = detail::parse_double(key, value, line_no);
            } else if (key == "gamma") {
                cfg.training.gamma = detail::parse_double(key, value, line_no);
            } else if (key == "use_sgd") {
                cfg.training.use_sgd = detail::parse_bool(key, value, line_no);
            } else {
                throw detail::config_error(line_no, "unknown key '" + key + "' in [training]");
            }
        } else {
            TaskSpec& spec = cfg.tasks[task_idx];
            if (key == "type") {
                try {
                    spec.type = task_type_from_name(value);
                } catch (const ConfigError&) {
                    throw detail::config_error(line_no,
                                               "key 'type': unknown task type '" + value + "'");
                }
                task_has_type[task_idx] = true;
            } else if (key == "labels") {
                spec.labels = detail::parse_list(key, value, line_no);
            } else if (key == "dropout") {
                spec.dropout = detail::parse_double(key, value, line_no);
            } else if (key == "train") {
                spec.train_path = value;
            } else if (key == "dev") {
                spec.dev_path = value;
            } else if (key == "test") {
                spec.test_path = value;
            } else if (key == "metrics") {
                spec.metrics = detail::parse_list(key, value, line_no);
            } else {
                throw detail::config_error(line_no,
                                           "unknown key '" + key + "' in [" + section_tag + "]");
            }
        }
    }

    if (!saw_model) throw ConfigError("config: missing [model] section");
    if (cfg.vocab_path.empty()) throw ConfigError("config: [model] needs a vocab path");
    if (cfg.tasks.empty()) throw ConfigError("config: no [task NAME] sections");
    for (std::size_t i = 0; i < cfg.tasks.size(); ++i) {
        if (!task_has_type[i]) {
            throw ConfigError("config: task '" + cfg.tasks[i].name + "' has no type");
        }
        if (cfg.tasks[i].metrics.empty()) {
            cfg.tasks[i].metrics = default_metrics(cfg.tasks[i].type);
        }
        cfg.tasks[i].validate();
        validate_task_metrics(cfg.tasks[i]);
    }
    cfg.model.validate();
    cfg.training.validate();
    return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_run_config(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

}  // namespace mtdnn
