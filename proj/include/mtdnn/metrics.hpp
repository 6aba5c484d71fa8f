#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "mtdnn/error.hpp"

namespace mtdnn {

inline double accuracy(const std::vector<std::size_t>& pred, const std::vector<std::size_t>& gold) {
    if (pred.empty() || pred.size() != gold.size()) {
        throw InputError("accuracy: need equal nonempty prediction/gold lists");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == gold[i];
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

// 2TP / (2TP + FP + FN); 0 when that denominator is empty.
inline double f1_binary(const std::vector<std::size_t>& pred, const std::vector<std::size_t>& gold,
                        std::size_t positive_class) {
    if (pred.empty() || pred.size() != gold.size()) {
        throw InputError("f1_binary: need equal nonempty prediction/gold lists");
    }
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] == positive_class, g = gold[i] == positive_class;
        tp += p && g;
        fp += p && !g;
        fn += !p && g;
    }
    const double denom = static_cast<double>(2 * tp + fp + fn);
    return denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
}

// (TP*TN - FP*FN) / sqrt((TP+FP)(TP+FN)(TN+FP)(TN+FN)); 0 when any factor
// vanishes. Labels must be 0/1.
inline double matthews_corr(const std::vector<std::size_t>& pred,
                            const std::vector<std::size_t>& gold) {
    if (pred.empty() || pred.size() != gold.size()) {
        throw InputError("matthews_corr: need equal nonempty prediction/gold lists");
    }
    double tp = 0, tn = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] > 1 || gold[i] > 1) throw InputError("matthews_corr: labels must be 0 or 1");
        if (pred[i] == 1 && gold[i] == 1) ++tp;
        if (pred[i] == 0 && gold[i] == 0) ++tn;
        if (pred[i] == 1 && gold[i] == 0) ++fp;
        if (pred[i] == 0 && gold[i] == 1) ++fn;
    }
    const double product = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    if (product == 0.0) return 0.0;
    return (tp * tn - fp * fn) / std::sqrt(product);
}

// Sample correlation; 0 by convention when either side is constant.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw InputError("pearson: need two equal-length lists of at least 2 values");
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double cov = 0.0, vx = 0.0, vy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        cov += (x[i] - mx) * (y[i] - my);
        vx += (x[i] - mx) * (x[i] - mx);
        vy += (y[i] - my) * (y[i] - my);
    }
    if (vx == 0.0 || vy == 0.0) return 0.0;
    return cov / std::sqrt(vx * vy);
}

// 1-based ranks with tied values sharing their average rank.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = static_cast<double>(i + j + 2) / 2.0;  // mean of 1-based i+1..j+1
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw InputError("spearman: need two equal-length lists of at least 2 values");
    }
    return pearson(average_ranks(x), average_ranks(y));
}

struct EvalReport {
    std::string task_name;
    std::vector<std::pair<std::string, double>> metrics;  // declaration order
    std::size_t n_examples = 0;

    std::string to_tsv() const {
        std::string out;
        char buf[96];
        for (const auto& [name, value] : metrics) {
            std::snprintf(buf, sizeof buf, "%s\t%s\t%.17g\n", task_name.c_str(), name.c_str(),
                          value);
            out += buf;
        }
        return out;
    }
};

}  // namespace mtdnn
