#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "mtdnn/tensor.hpp"

namespace mtdnn {

struct GradCheckResult {
    bool pass = true;
    double max_rel_err = 0.0;
    std::string worst;  // "param#coord" of the worst coordinate
};

// Compares reverse-mode gradients of a scalar-valued function against central
// finite differences. `f` must rebuild its computation from the given graph on
// every call (parameters captured by reference so perturbations are seen).
// Relative error per coordinate: |a - n| / max(1e-6, |a| + |n|).
inline GradCheckResult grad_check(const std::function<Tensor(Graph&)>& f,
                                  const std::vector<Tensor>& params, double tol,
                                  double step = 1e-5) {
    for (const Tensor& p : params) {
        if (!p.requires_grad()) throw ContractError("grad_check: parameter without requires_grad");
        // A stale intermediate passed as a parameter would desynchronize the
        // replays below.
        if (p.impl()->graph_id != 0) throw ContractError("grad_check: parameter is not a leaf");
    }
    for (const Tensor& p : params) const_cast<Tensor&>(p).zero_grad();
    std::vector<std::vector<double>> analytic;
    {
        Graph g;
        Tensor loss = f(g);
        g.backward(loss);
    }
    for (const Tensor& p : params) {
        analytic.emplace_back(p.grad().begin(), p.grad().end());
    }
    GradCheckResult res;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor p = params[pi];
        for (std::size_t i = 0; i < p.numel(); ++i) {
            const double saved = p.at(i);
            p.at(i) = saved + step;
            double up, down;
            {
                Graph g;
                up = f(g).value();
            }
            p.at(i) = saved - step;
            {
                Graph g;
                down = f(g).value();
            }
            p.at(i) = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double a = analytic[pi][i];
            const double rel =
                std::fabs(a - numeric) / std::max(1e-6, std::fabs(a) + std::fabs(numeric));
            if (rel > res.max_rel_err) {
                res.max_rel_err = rel;
                res.worst = "param" + std::to_string(pi) + "#" + std::to_string(i);
            }
        }
    }
    res.pass = res.max_rel_err <= tol;
    return res;
}

}  // namespace mtdnn
