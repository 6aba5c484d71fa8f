#pragma once

#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "mtdnn/checkpoint.hpp"
#include "mtdnn/data.hpp"
#include "mtdnn/error.hpp"
#include "mtdnn/model.hpp"
#include "mtdnn/optimizer.hpp"
#include "mtdnn/rng.hpp"

namespace mtdnn {

// ---------------------------------------------------------------------------
// Epoch planning: shuffle each task's examples, cut into fixed-size batches
// (short last batch kept), merge all tasks' batches and shuffle the merged
// list. Every example appears in exactly one batch per epoch.
// ---------------------------------------------------------------------------

struct Batch {
    std::size_t task = 0;
    std::vector<std::size_t> example_ids;
};

struct EpochPlan {
    std::vector<Batch> batches;
};

inline EpochPlan pack_epoch(const std::vector<std::size_t>& task_sizes, std::size_t batch_size,
                            Rng& rng) {
    if (batch_size < 1) throw ConfigError("pack_epoch: batch_size must be positive");
    EpochPlan plan;
    for (std::size_t t = 0; t < task_sizes.size(); ++t) {
        if (task_sizes[t] == 0) {
            throw ConfigError("pack_epoch: task " + std::to_string(t) +
                              " has no training examples");
        }
        std::vector<std::size_t> ids(task_sizes[t]);
        std::iota(ids.begin(), ids.end(), 0);
        rng.shuffle(ids);
        for (std::size_t start = 0; start < ids.size(); start += batch_size) {
            Batch b;
            b.task = t;
            const std::size_t end = std::min(start + batch_size, ids.size());
            b.example_ids.assign(ids.begin() + start, ids.begin() + end);
            plan.batches.push_back(std::move(b));
        }
    }
    rng.shuffle(plan.batches);
    return plan;
}

// ---------------------------------------------------------------------------
// Training loop.
// ---------------------------------------------------------------------------

struct TrainLogEntry {
    std::size_t epoch = 0;
    std::size_t global_step = 0;
    std::string task_name;
    double loss = 0.0;
    double lr = 0.0;
};

inline std::string format_log_line(const TrainLogEntry& e) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu\t%zu\t%s\t%.17g\t%.17g", e.epoch, e.global_step,
                  e.task_name.c_str(), e.loss, e.lr);
    return buf;
}

struct TrainResult {
    std::vector<TrainLogEntry> log;
    std::size_t total_steps = 0;
};

namespace detail {

inline Tensor u64_entry(std::uint64_t v) {
    return Tensor::from({2}, {static_cast<double>(v >> 32),
                              static_cast<double>(v & 0xffffffffull)});
}

inline std::uint64_t u64_from_entry(const Tensor& t, const std::string& name) {
    if (t.shape() != Shape{2}) {
        throw CheckpointError("checkpoint: entry '" + name + "' is not a split 64-bit value");
    }
    return (static_cast<std::uint64_t>(t.at(0)) << 32) | static_cast<std::uint64_t>(t.at(1));
}

}  // namespace detail

// Multi-task mini-batch training: each step draws one single-task batch from
// the merged shuffled epoch plan, computes that task's loss through the
// shared encoder, clips the global gradient norm and applies one Adamax
// update under the warmup/decay schedule.
class Trainer {
  public:
    Trainer(Model& model, const std::vector<DatasetSplit>& train_splits, TrainConfig cfg)
        : model_(model), cfg_(std::move(cfg)) {
        cfg_.validate();
        for (const TaskSpec& spec : model_.tasks) {
            const DatasetSplit* found = nullptr;
            for (const DatasetSplit& s : train_splits) {
                if (s.task_name == spec.name) {
                    found = &s;
                    break;
                }
            }
            if (!found) {
                throw ConfigError("trainer: no training data for task '" + spec.name + "'");
            }
            if (found->split != Split::train) {
                throw ConfigError("trainer: task '" + spec.name + "' got a non-train split");
            }
            if (found->examples.empty()) {
                throw ConfigError("trainer: task '" + spec.name + "' has no training examples");
            }
            for (const Example& ex : found->examples) {
                if (!example_matches(ex, spec.type)) {
                    throw ContractError("trainer: task '" + spec.name +
                                        "' training data holds the wrong example kind");
                }
            }
            data_.push_back(*found);
            sizes_.push_back(found->examples.size());
        }
        std::size_t batches_per_epoch = 0;
        for (std::size_t n : sizes_) {
            batches_per_epoch += (n + cfg_.batch_size - 1) / cfg_.batch_size;
        }
        total_steps_ = cfg_.epochs * batches_per_epoch;
        opt_.emplace(cfg_, model_.named_params());
        const Rng root(cfg_.seed);
        dropout_rng_ = root.split(RngStream::dropout);
        shuffle_rng_ = root.split(RngStream::shuffle);
    }

    std::size_t total_steps() const { return total_steps_; }
    std::size_t steps_taken() const { return opt_->steps_taken(); }
    std::size_t epochs_done() const { return epoch_; }

    // One optimizer update from one planned batch. On a non-finite loss or
    // gradient this throws without touching the parameters.
    TrainLogEntry train_step(const Batch& batch) {
        const std::size_t step = opt_->steps_taken();
        const double lr = lr_at(step, total_steps_, cfg_);
        std::vector<Example> examples;
        examples.reserve(batch.example_ids.size());
        for (std::size_t id : batch.example_ids) {
            examples.push_back(data_.at(batch.task).examples.at(id));
        }
        for (auto& [name, p] : opt_->params()) {
            (void)name;
            Tensor handle = p;
            handle.zero_grad();
        }
        Graph g;
        LossValue loss =
            batch_loss(g, model_, batch.task, examples, true, dropout_rng_, cfg_.gamma);
        g.backward(loss.value);
        clip_gradients(opt_->params(), cfg_.clip_norm);
        opt_->apply(lr);
        TrainLogEntry entry;
        entry.epoch = epoch_;
        entry.global_step = step;
        entry.task_name = loss.task_name;
        entry.loss = loss.value.value();
        entry.lr = lr;
        return entry;
    }

    // Full run: epochs x (pack + step over every batch), with an epoch-end
    // checkpoint and a final model.ckpt when out_dir is given.
    TrainResult run(std::ostream* log_sink = nullptr, const std::string& out_dir = "") {
        TrainResult result;
        result.total_steps = total_steps_;
        for (std::size_t e = 0; e < cfg_.epochs; ++e) {
            EpochPlan plan = pack_epoch(sizes_, cfg_.batch_size, shuffle_rng_);
            for (const Batch& b : plan.batches) {
                TrainLogEntry entry = train_step(b);
                if (log_sink) *log_sink << format_log_line(entry) << '\n';
                result.log.push_back(std::move(entry));
            }
            epoch_ = e + 1;
            if (!out_dir.empty()) {
                save_checkpoint(out_dir + "/epoch_" + std::to_string(e) + ".ckpt", snapshot());
            }
        }
        if (!out_dir.empty()) save_checkpoint(out_dir + "/model.ckpt", snapshot());
        return result;
    }

    // Deep copy of parameters plus optimizer moments, counters and rng
    // cursors, as checkpoint entries.
    NamedTensors snapshot() const {
        NamedTensors out;
        for (const auto& [name, p] : opt_->params()) {
            Tensor copy = Tensor::zeros(p.shape());
            std::copy(p.data().begin(), p.data().end(), copy.data().begin());
            out.emplace_back(name, std::move(copy));
        }
        out.emplace_back("trainer.step",
                         Tensor::scalar(static_cast<double>(opt_->steps_taken())));
        out.emplace_back("trainer.epoch", Tensor::scalar(static_cast<double>(epoch_)));
        out.emplace_back("trainer.rng.dropout", detail::u64_entry(dropout_rng_.state()));
        out.emplace_back("trainer.rng.shuffle", detail::u64_entry(shuffle_rng_.state()));
        opt_->append_state(out);
        return out;
    }

    void restore(const NamedTensors& state) {
        assign_params(state, opt_->params());
        const char* needed[] = {"trainer.step", "trainer.epoch", "trainer.rng.dropout",
                                "trainer.rng.shuffle"};
        for (const char* name : needed) {
            if (!find_entry(state, name)) {
                throw CheckpointError(std::string("checkpoint: missing entry '") + name + "'");
            }
        }
        const std::size_t step =
            static_cast<std::size_t>(find_entry(state, "trainer.step")->value());
        epoch_ = static_cast<std::size_t>(find_entry(state, "trainer.epoch")->value());
        dropout_rng_ = Rng(
            detail::u64_from_entry(*find_entry(state, "trainer.rng.dropout"), "trainer.rng.dropout"));
        shuffle_rng_ = Rng(
            detail::u64_from_entry(*find_entry(state, "trainer.rng.shuffle"), "trainer.rng.shuffle"));
        opt_->restore_state(state, step);
    }

  private:
    Model& model_;
    TrainConfig cfg_;
    std::vector<DatasetSplit> data_;
    std::vector<std::size_t> sizes_;
    std::optional<Optimizer> opt_;
    std::size_t total_steps_ = 0;
    std::size_t epoch_ = 0;
    Rng dropout_rng_{0};
    Rng shuffle_rng_{0};
};

// Adapts a trained shared encoder to one new task: the encoder weights come
// from the checkpoint, the head starts fresh, then ordinary single-task
// training applies.
inline Model fine_tune_init(const NamedTensors& loaded, ModelConfig cfg, Vocabulary vocab,
                            TaskSpec new_task, Rng& rng) {
    Model m = Model::init(std::move(cfg), std::move(vocab), {std::move(new_task)}, rng);
    assign_params(loaded, m.encoder_params());
    return m;
}

}  // namespace mtdnn
