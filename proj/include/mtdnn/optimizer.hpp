#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mtdnn/checkpoint.hpp"
#include "mtdnn/error.hpp"
#include "mtdnn/tensor.hpp"

namespace mtdnn {

struct TrainConfig {
    double lr_peak = 5e-5;
    std::size_t batch_size = 32;
    std::size_t epochs = 5;
    double warmup_fraction = 0.1;
    double clip_norm = 1.0;
    double adamax_beta1 = 0.9;
    double adamax_beta2 = 0.999;
    double adamax_eps = 1e-8;
    double gamma = 1.0;
    std::uint64_t seed = 0;
    // Plain gradient descent instead of Adamax; kept for analytic tests.
    bool use_sgd = false;

    void validate() const {
        if (!(lr_peak > 0)) throw ConfigError("training: lr_peak must be positive");
        if (batch_size < 1) throw ConfigError("training: batch_size must be positive");
        if (epochs < 1) throw ConfigError("training: epochs must be at least 1");
        if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) {
            throw ConfigError("training: warmup_fraction must be in [0,1)");
        }
        if (!(clip_norm > 0)) throw ConfigError("training: clip_norm must be positive");
        if (!(adamax_beta1 > 0 && adamax_beta1 < 1)) {
            throw ConfigError("training: adamax_beta1 must be in (0,1)");
        }
        if (!(adamax_beta2 > 0 && adamax_beta2 < 1)) {
            throw ConfigError("training: adamax_beta2 must be in (0,1)");
        }
        if (!(adamax_eps > 0)) throw ConfigError("training: adamax_eps must be positive");
        if (!(gamma > 0)) throw ConfigError("training: gamma must be positive");
    }
};

// Linear ramp 0 -> lr_peak over the first warmup_fraction of total_steps,
// then linear decay lr_peak -> 0 at total_steps.
inline double lr_at(std::size_t step, std::size_t total_steps, const TrainConfig& cfg) {
    if (total_steps < 1) throw ContractError("lr_at: total_steps must be at least 1");
    if (step > total_steps) throw ContractError("lr_at: step past end of schedule");
    const double total = static_cast<double>(total_steps);
    const double warm = cfg.warmup_fraction * total;
    const double s = static_cast<double>(step);
    if (warm > 0.0 && s < warm) return cfg.lr_peak * (s / warm);
    return cfg.lr_peak * ((total - s) / (total - warm));
}

// Scales all gradients so the global L2 norm is at most clip_norm; returns
// the applied scale (1.0 when already within the budget).
inline double clip_gradients(const NamedTensors& params, double clip_norm) {
    if (!(clip_norm > 0)) throw ConfigError("clip_gradients: clip_norm must be positive");
    double sq = 0.0;
    for (const auto& [name, p] : params) {
        (void)name;
        for (double g : p.grad()) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (!std::isfinite(norm)) {
        throw NumericError("clip_gradients: gradient norm is not finite");
    }
    if (norm <= clip_norm) return 1.0;
    const double scale = clip_norm / norm;
    for (const auto& [name, p] : params) {
        (void)name;
        Tensor handle = p;
        for (double& g : handle.grad()) g *= scale;
    }
    return scale;
}

// Adamax with bias-corrected first moment:
//   m <- b1*m + (1-b1)*g;  u <- max(b2*u, |g|)
//   theta <- theta - lr * (m / (1 - b1^t)) / max(u, eps)
// so the very first step moves each coordinate by exactly lr in magnitude.
class Optimizer {
  public:
    Optimizer(TrainConfig cfg, NamedTensors params)
        : cfg_(std::move(cfg)), params_(std::move(params)) {
        for (const auto& [name, p] : params_) {
            if (!p.requires_grad()) {
                throw ContractError("optimizer: parameter '" + name + "' is not trainable");
            }
            m_.emplace_back(p.numel(), 0.0);
            u_.emplace_back(p.numel(), 0.0);
        }
    }

    void apply(double lr) {
        ++step_;
        const double correction = 1.0 - std::pow(cfg_.adamax_beta1, static_cast<double>(step_));
        for (std::size_t i = 0; i < params_.size(); ++i) {
            Tensor& p = params_[i].second;
            auto grads = p.grad();
            auto values = p.data();
            if (cfg_.use_sgd) {
                for (std::size_t j = 0; j < values.size(); ++j) values[j] -= lr * grads[j];
                continue;
            }
            std::vector<double>& m = m_[i];
            std::vector<double>& u = u_[i];
            for (std::size_t j = 0; j < values.size(); ++j) {
                m[j] = cfg_.adamax_beta1 * m[j] + (1.0 - cfg_.adamax_beta1) * grads[j];
                u[j] = std::max(cfg_.adamax_beta2 * u[j], std::abs(grads[j]));
                const double m_hat = m[j] / correction;
                values[j] -= lr * m_hat / std::max(u[j], cfg_.adamax_eps);
            }
        }
    }

    std::size_t steps_taken() const { return step_; }

    // Moment accumulators as checkpoint entries named trainer.m.<param> and
    // trainer.u.<param>.
    void append_state(NamedTensors& out) const {
        for (std::size_t i = 0; i < params_.size(); ++i) {
            const auto& [name, p] = params_[i];
            Tensor m = Tensor::zeros(p.shape());
            Tensor u = Tensor::zeros(p.shape());
            std::copy(m_[i].begin(), m_[i].end(), m.data().begin());
            std::copy(u_[i].begin(), u_[i].end(), u.data().begin());
            out.emplace_back("trainer.m." + name, std::move(m));
            out.emplace_back("trainer.u." + name, std::move(u));
        }
    }

    void restore_state(const NamedTensors& loaded, std::size_t step) {
        std::string missing;
        for (const auto& [name, p] : params_) {
            for (const char* kind : {"trainer.m.", "trainer.u."}) {
                const Tensor* src = find_entry(loaded, kind + name);
                if (!src || src->shape() != p.shape()) {
                    missing += missing.empty() ? kind + name : ", " + (kind + name);
                }
            }
        }
        if (!missing.empty()) {
            throw CheckpointError("checkpoint: bad optimizer state; offending: " + missing);
        }
        for (std::size_t i = 0; i < params_.size(); ++i) {
            const auto& name = params_[i].first;
            const Tensor* m = find_entry(loaded, "trainer.m." + name);
            const Tensor* u = find_entry(loaded, "trainer.u." + name);
            std::copy(m->data().begin(), m->data().end(), m_[i].begin());
            std::copy(u->data().begin(), u->data().end(), u_[i].begin());
        }
        step_ = step;
    }

    const NamedTensors& params() const { return params_; }

  private:
    TrainConfig cfg_;
    NamedTensors params_;
    std::vector<std::vector<double>> m_, u_;
    std::size_t step_ = 0;
};

}  // namespace mtdnn
