#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mtdnn/grad_check.hpp"
#include "mtdnn/heads.hpp"

using namespace mtdnn;

namespace {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

Vec softmax_ref(Vec v) {
    double mx = v[0];
    for (double x : v) mx = std::max(mx, x);
    double denom = 0.0;
    for (double& x : v) {
        x = std::exp(x - mx);
        denom += x;
    }
    for (double& x : v) x /= denom;
    return v;
}

double sigmoid_ref(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Mat tensor_rows(const Tensor& t) {
    Mat out(t.extent(0), Vec(t.extent(1)));
    for (std::size_t i = 0; i < t.extent(0); ++i) {
        for (std::size_t j = 0; j < t.extent(1); ++j) out[i][j] = t.at(i, j);
    }
    return out;
}

Vec tensor_vec(const Tensor& t) { return Vec(t.data().begin(), t.data().end()); }

// reference GRU matching the row-vector convention: out_j = sum_i v_i W[i][j]
Vec vm(const Vec& v, const Mat& w) {
    Vec out(w[0].size(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) {
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += v[i] * w[i][j];
    }
    return out;
}

Vec gru_ref(const GruParams& p, const Vec& h, const Vec& x) {
    const Mat wr = tensor_rows(p.wr), ur = tensor_rows(p.ur);
    const Mat wz = tensor_rows(p.wz), uz = tensor_rows(p.uz);
    const Mat wn = tensor_rows(p.wn), un = tensor_rows(p.un);
    const Vec br = tensor_vec(p.br), bz = tensor_vec(p.bz), bn = tensor_vec(p.bn);
    const std::size_t d = h.size();
    Vec r = vm(x, wr), z = vm(x, wz);
    const Vec rh1 = vm(h, ur), zh = vm(h, uz);
    for (std::size_t j = 0; j < d; ++j) {
        r[j] = sigmoid_ref(r[j] + rh1[j] + br[j]);
        z[j] = sigmoid_ref(z[j] + zh[j] + bz[j]);
    }
    Vec rh(d);
    for (std::size_t j = 0; j < d; ++j) rh[j] = r[j] * h[j];
    Vec n = vm(x, wn);
    const Vec nh = vm(rh, un);
    Vec out(d);
    for (std::size_t j = 0; j < d; ++j) {
        n[j] = std::tanh(n[j] + nh[j] + bn[j]);
        out[j] = z[j] * h[j] + (1.0 - z[j]) * n[j];
    }
    return out;
}

// straight-line multi-step recurrence, evaluation mode (all steps kept)
Vec san_ref(const Mat& mp, const Mat& mh, const SanHead& head) {
    const std::size_t d = mp[0].size();
    const Vec w1 = tensor_vec(head.w1);
    const Mat w2 = tensor_rows(head.w2), w3 = tensor_rows(head.w3);
    Vec alpha(mh.size());
    for (std::size_t j = 0; j < mh.size(); ++j) {
        double acc = 0.0;
        for (std::size_t e = 0; e < d; ++e) acc += w1[e] * mh[j][e];
        alpha[j] = acc;
    }
    alpha = softmax_ref(alpha);
    Vec s(d, 0.0);
    for (std::size_t j = 0; j < mh.size(); ++j) {
        for (std::size_t e = 0; e < d; ++e) s[e] += alpha[j] * mh[j][e];
    }
    Vec avg;
    for (std::size_t k = 0; k < head.k_steps; ++k) {
        Vec probe(d, 0.0);  // s times W2^T
        for (std::size_t e = 0; e < d; ++e) {
            for (std::size_t f = 0; f < d; ++f) probe[e] += s[f] * w2[e][f];
        }
        Vec beta(mp.size());
        for (std::size_t j = 0; j < mp.size(); ++j) {
            double acc = 0.0;
            for (std::size_t e = 0; e < d; ++e) acc += probe[e] * mp[j][e];
            beta[j] = acc;
        }
        beta = softmax_ref(beta);
        Vec x(d, 0.0);
        for (std::size_t j = 0; j < mp.size(); ++j) {
            for (std::size_t e = 0; e < d; ++e) x[e] += beta[j] * mp[j][e];
        }
        if (k >= 1) s = gru_ref(head.gru, s, x);
        Vec feat;
        feat.insert(feat.end(), s.begin(), s.end());
        feat.insert(feat.end(), x.begin(), x.end());
        for (std::size_t e = 0; e < d; ++e) feat.push_back(std::fabs(s[e] - x[e]));
        for (std::size_t e = 0; e < d; ++e) feat.push_back(s[e] * x[e]);
        Vec logits(w3[0].size(), 0.0);
        for (std::size_t i = 0; i < feat.size(); ++i) {
            for (std::size_t c = 0; c < logits.size(); ++c) logits[c] += feat[i] * w3[i][c];
        }
        const Vec p = softmax_ref(logits);
        if (avg.empty()) {
            avg = p;
        } else {
            for (std::size_t c = 0; c < p.size(); ++c) avg[c] += p[c];
        }
    }
    for (double& v : avg) v /= static_cast<double>(head.k_steps);
    return avg;
}

}  // namespace

TEST(classify, zero_weights_give_uniform) {
    Rng rng(1);
    ClassificationHead head = ClassificationHead::init(4, 3, rng);
    for (auto& v : head.w.data()) v = 0.0;
    Graph g;
    Tensor p = classify_single(g, Tensor::from({4}, {1, 2, 3, 4}), head);
    for (std::size_t c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(p.at(c), 1.0 / 3.0);
}

TEST(classify, equal_logits_split_evenly) {
    Rng rng(2);
    ClassificationHead head = ClassificationHead::init(2, 2, rng);
    head.w.at(0, 0) = 1.0;
    head.w.at(1, 0) = 0.5;
    head.w.at(0, 1) = 1.0;
    head.w.at(1, 1) = 0.5;  // identical columns => identical logits
    Graph g;
    Tensor p = classify_single(g, Tensor::from({2}, {0.3, -1.2}), head);
    EXPECT_DOUBLE_EQ(p.at(0), 0.5);
    EXPECT_DOUBLE_EQ(p.at(1), 0.5);
}

TEST(classify, matches_direct_evaluation) {
    Rng rng(3);
    ClassificationHead head = ClassificationHead::init(4, 3, rng);
    Tensor x = Tensor::randn({4}, rng, 1.0);
    Graph g;
    Tensor p = classify_single(g, x, head);
    Vec logits(3, 0.0);
    for (int i = 0; i < 4; ++i) {
        for (int c = 0; c < 3; ++c) logits[c] += head.w.at(i, c) * x.at(i);
    }
    const Vec want = softmax_ref(logits);
    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        EXPECT_NEAR(p.at(c), want[c], 1e-12);
        total += p.at(c);
    }
    EXPECT_NEAR(total, 1.0, 1e-10);
}

TEST(classify, argmax_invariant_under_logit_shift) {
    Rng rng(4);
    ClassificationHead head = ClassificationHead::init(4, 3, rng);
    for (auto& v : head.w.data()) v = rng.normal(1.0);
    Tensor x = Tensor::randn({4}, rng, 1.0);
    double xx = 0.0;
    for (std::size_t i = 0; i < 4; ++i) xx += x.at(i) * x.at(i);
    ClassificationHead shifted{Tensor::zeros({4, 3}, true)};
    const double c = 7.5;  // adds c to every logit
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            shifted.w.at(i, j) = head.w.at(i, j) + c * x.at(i) / xx;
        }
    }
    Graph g;
    Tensor p = classify_single(g, x, head);
    Tensor q = classify_single(g, x, shifted);
    const auto argmax = [](const Tensor& t) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < t.numel(); ++i) {
            if (t.at(i) > t.at(best)) best = i;
        }
        return best;
    };
    EXPECT_EQ(argmax(p), argmax(q));
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(p.at(j), q.at(j), 1e-9);
}

TEST(similarity_head, projection_and_oracle) {
    Rng rng(5);
    SimilarityHead head = SimilarityHead::init(4, rng);
    Graph g;
    for (auto& v : head.w.data()) v = 0.0;
    EXPECT_DOUBLE_EQ(similarity(g, Tensor::from({4}, {1, 2, 3, 4}), head).value(), 0.0);
    head.w.at(0) = 1.0;  // e1
    Tensor x = Tensor::from({4}, {3.5, -2, 8, 1});
    EXPECT_DOUBLE_EQ(similarity(g, x, head).value(), 3.5);
    for (auto& v : head.w.data()) v = rng.normal(1.0);
    double want = 0.0;
    for (std::size_t i = 0; i < 4; ++i) want += head.w.at(i) * x.at(i);
    EXPECT_NEAR(similarity(g, x, head).value(), want, 1e-12);
}

TEST(relevance_head, sigmoid_of_dot) {
    Rng rng(6);
    RankingHead head = RankingHead::init(4, rng);
    Graph g;
    for (auto& v : head.w.data()) v = 0.0;
    Tensor x = Tensor::from({4}, {1, 2, 3, 4});
    EXPECT_DOUBLE_EQ(relevance(g, x, head).value(), 0.5);
    head.w.at(0) = 1.0;
    Tensor one = Tensor::from({4}, {1, 0, 0, 0});
    EXPECT_NEAR(relevance(g, one, head).value(), 0.7310585786300049, 1e-12);
    Tensor big = Tensor::from({4}, {500, 0, 0, 0});
    const double r = relevance(g, big, head).value();
    EXPECT_GT(r, 1.0 - 1e-12);
    EXPECT_LE(r, 1.0);
}

TEST(rank_by_score_fn, ordering_and_ties) {
    EXPECT_EQ(rank_by_score({0.4}), (std::vector<std::size_t>{0}));
    EXPECT_EQ(rank_by_score({0.2, 0.9, 0.5}), (std::vector<std::size_t>{1, 2, 0}));
    EXPECT_EQ(rank_by_score({0.5, 0.5, 0.5}), (std::vector<std::size_t>{0, 1, 2}));
    EXPECT_THROW(rank_by_score({}), InputError);
}

TEST(gru, matches_reference_cell) {
    Rng rng(7);
    GruParams p = GruParams::init(5, rng);
    for (auto& v : p.br.data()) v = rng.normal(0.5);
    for (auto& v : p.bz.data()) v = rng.normal(0.5);
    for (auto& v : p.bn.data()) v = rng.normal(0.5);
    Tensor h = Tensor::randn({5}, rng, 1.0);
    Tensor x = Tensor::randn({5}, rng, 1.0);
    Graph g;
    Tensor out = gru_cell(g, p, h, x);
    const Vec want = gru_ref(p, tensor_vec(h), tensor_vec(x));
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(out.at(j), want[j], 1e-12);
}

TEST(gru, gradients_match_finite_differences) {
    Rng rng(8);
    GruParams p = GruParams::init(4, rng);
    std::vector<Tensor> params;
    p.for_each_param("gru.", [&](const std::string&, Tensor& t) {
        for (auto& v : t.data()) v = rng.normal(0.3);
        params.push_back(t);
    });
    Tensor h = Tensor::randn({4}, rng, 1.0, true);
    Tensor x = Tensor::randn({4}, rng, 1.0, true);
    params.push_back(h);
    params.push_back(x);
    Tensor w = Tensor::randn({4}, rng, 1.0);
    auto f = [&](Graph& g) { return dot(g, gru_cell(g, p, h, x), w); };
    auto res = grad_check(f, params, 1e-4, 1e-5);
    EXPECT_TRUE(res.pass) << res.worst << " rel err " << res.max_rel_err;
}

TEST(san, single_step_eval_is_first_distribution) {
    Rng rng(9);
    SanHead head = SanHead::init(4, 3, 1, 0.0, rng);
    Tensor mp = Tensor::randn({3, 4}, rng, 1.0);
    Tensor mh = Tensor::randn({2, 4}, rng, 1.0);
    Graph g;
    Rng drop(1);
    SanTrace trace;
    Tensor out = san_forward(g, mp, mh, head, false, drop, &trace);
    ASSERT_EQ(trace.steps.size(), 1u);
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(out.at(c), trace.steps[0].p.at(c));
}

TEST(san, single_hypothesis_row_state) {
    Rng rng(10);
    SanHead head = SanHead::init(4, 2, 2, 0.0, rng);
    Tensor mp = Tensor::randn({2, 4}, rng, 1.0);
    Tensor mh = Tensor::randn({1, 4}, rng, 1.0);
    Graph g;
    Rng drop(1);
    SanTrace trace;
    (void)san_forward(g, mp, mh, head, false, drop, &trace);
    ASSERT_EQ(trace.alpha.numel(), 1u);
    EXPECT_DOUBLE_EQ(trace.alpha.at(0), 1.0);
    for (std::size_t e = 0; e < 4; ++e) EXPECT_DOUBLE_EQ(trace.steps[0].s.at(e), mh.at(0, e));
}

TEST(san, matches_straight_line_recurrence) {
    Rng rng(11);
    SanHead head = SanHead::init(4, 3, 3, 0.0, rng);
    Tensor mp = Tensor::randn({2, 4}, rng, 0.8);
    Tensor mh = Tensor::randn({2, 4}, rng, 0.8);
    Graph g;
    Rng drop(1);
    Tensor out = san_forward(g, mp, mh, head, false, drop);
    const Vec want = san_ref(tensor_rows(mp), tensor_rows(mh), head);
    double total = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
        EXPECT_NEAR(out.at(c), want[c], 1e-10);
        total += out.at(c);
    }
    EXPECT_NEAR(total, 1.0, 1e-10);
}

TEST(san, traced_distributions_normalized) {
    Rng rng(12);
    SanHead head = SanHead::init(6, 3, 5, 0.1, rng);
    Tensor mp = Tensor::randn({4, 6}, rng, 1.0);
    Tensor mh = Tensor::randn({3, 6}, rng, 1.0);
    Graph g;
    Rng drop(21);
    SanTrace trace;
    Tensor out = san_forward(g, mp, mh, head, true, drop, &trace);
    const auto check_dist = [](const Tensor& t) {
        double s = 0.0;
        for (std::size_t i = 0; i < t.numel(); ++i) {
            ASSERT_GE(t.at(i), 0.0);
            s += t.at(i);
        }
        EXPECT_NEAR(s, 1.0, 1e-10);
    };
    check_dist(trace.alpha);
    ASSERT_EQ(trace.steps.size(), 5u);
    std::size_t n_kept = 0;
    for (const auto& st : trace.steps) {
        check_dist(st.beta);
        check_dist(st.p);
    }
    for (bool b : trace.kept) n_kept += b;
    ASSERT_GE(n_kept, 1u);
    check_dist(out);
}

TEST(san, zero_dropout_training_equals_eval_bitwise) {
    Rng rng(13);
    SanHead head = SanHead::init(4, 3, 5, 0.0, rng);
    Tensor mp = Tensor::randn({3, 4}, rng, 1.0);
    Tensor mh = Tensor::randn({2, 4}, rng, 1.0);
    auto run = [&](bool training) {
        Graph g;
        Rng drop(5);
        Tensor out = san_forward(g, mp, mh, head, training, drop);
        return tensor_vec(out);
    };
    const Vec train = run(true), eval = run(false);
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(train[c], eval[c]);
}

TEST(san, all_dropped_falls_back_to_keeping_all) {
    Rng rng(14);
    SanHead head = SanHead::init(4, 2, 5, 0.97, rng);
    Tensor mp = Tensor::randn({2, 4}, rng, 1.0);
    Tensor mh = Tensor::randn({2, 4}, rng, 1.0);
    Vec eval_out;
    {
        Graph g;
        Rng drop(1);
        eval_out = tensor_vec(san_forward(g, mp, mh, head, false, drop));
    }
    bool saw_fallback = false;
    for (std::uint64_t seed = 0; seed < 200 && !saw_fallback; ++seed) {
        Rng probe(seed);
        bool all_dropped = true;
        for (int k = 0; k < 5; ++k) all_dropped = all_dropped && probe.uniform() < 0.97;
        if (!all_dropped) continue;
        saw_fallback = true;
        Graph g;
        Rng drop(seed);
        SanTrace trace;
        const Vec out = tensor_vec(san_forward(g, mp, mh, head, true, drop, &trace));
        for (bool b : trace.kept) EXPECT_TRUE(b);
        for (std::size_t c = 0; c < out.size(); ++c) EXPECT_EQ(out[c], eval_out[c]);
    }
    EXPECT_TRUE(saw_fallback);  // with p=0.97 an all-dropped draw must occur
}

TEST(san, masked_average_is_unbiased) {
    Rng rng(15);
    SanHead head = SanHead::init(4, 3, 5, 0.1, rng);
    Tensor mp = Tensor::randn({3, 4}, rng, 1.0);
    Tensor mh = Tensor::randn({2, 4}, rng, 1.0);
    Vec eval_out;
    {
        Graph g;
        Rng drop(1);
        eval_out = tensor_vec(san_forward(g, mp, mh, head, false, drop));
    }
    Vec mean(3, 0.0);
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        Graph g;
        Rng drop(1000 + static_cast<std::uint64_t>(i));
        const Vec out = tensor_vec(san_forward(g, mp, mh, head, true, drop));
        for (int c = 0; c < 3; ++c) mean[c] += out[c];
    }
    for (int c = 0; c < 3; ++c) {
        EXPECT_NEAR(mean[c] / n, eval_out[c], 0.01);
    }
}

TEST(san, input_validation) {
    Rng rng(16);
    SanHead head = SanHead::init(4, 3, 5, 0.1, rng);
    Graph g;
    Rng drop(1);
    EXPECT_THROW(san_forward(g, Tensor::zeros({0, 4}), Tensor::zeros({2, 4}), head, false, drop),
                 InputError);
    EXPECT_THROW(san_forward(g, Tensor::zeros({2, 4}), Tensor::zeros({0, 4}), head, false, drop),
                 InputError);
    EXPECT_THROW(san_forward(g, Tensor::zeros({2, 4}), Tensor::zeros({2, 6}), head, false, drop),
                 DimensionError);
    EXPECT_THROW(SanHead::init(4, 1, 5, 0.1, rng), ConfigError);
    EXPECT_THROW(SanHead::init(4, 3, 0, 0.1, rng), ConfigError);
    EXPECT_THROW(SanHead::init(4, 3, 5, 1.0, rng), ConfigError);
}

TEST(heads_fd, every_head_passes_gradient_check) {
    Rng rng(17);
    // classification
    {
        ClassificationHead head = ClassificationHead::init(4, 3, rng);
        Tensor x = Tensor::randn({4}, rng, 1.0, true);
        auto f = [&](Graph& g) {
            return scale(g, select(g, log_clamped(g, classify_single(g, x, head), 1e-12), 1),
                         -1.0);
        };
        auto res = grad_check(f, {head.w, x}, 1e-4, 1e-5);
        EXPECT_TRUE(res.pass) << "classification: " << res.worst << " " << res.max_rel_err;
    }
    // similarity
    {
        SimilarityHead head = SimilarityHead::init(4, rng);
        Tensor x = Tensor::randn({4}, rng, 1.0, true);
        auto f = [&](Graph& g) {
            Tensor diff = sub(g, similarity(g, x, head), Tensor::scalar(0.7));
            return mul(g, diff, diff);
        };
        auto res = grad_check(f, {head.w, x}, 1e-4, 1e-5);
        EXPECT_TRUE(res.pass) << "similarity: " << res.worst << " " << res.max_rel_err;
    }
    // ranking
    {
        RankingHead head = RankingHead::init(4, rng);
        Tensor x = Tensor::randn({4}, rng, 1.0, true);
        auto f = [&](Graph& g) {
            return scale(g, log_clamped(g, relevance(g, x, head), 1e-12), -1.0);
        };
        auto res = grad_check(f, {head.w, x}, 1e-4, 1e-5);
        EXPECT_TRUE(res.pass) << "ranking: " << res.worst << " " << res.max_rel_err;
    }
    // multi-step pairwise, K=5, dropout off
    {
        SanHead head = SanHead::init(4, 3, 5, 0.0, rng);
        std::vector<Tensor> params;
        head.for_each_param("san.", [&](const std::string&, Tensor& t) {
            for (auto& v : t.data()) v = rng.normal(0.3);
            params.push_back(t);
        });
        Tensor mp = Tensor::randn({2, 4}, rng, 0.8, true);
        Tensor mh = Tensor::randn({2, 4}, rng, 0.8, true);
        params.push_back(mp);
        params.push_back(mh);
        auto f = [&](Graph& g) {
            Rng drop(1);
            Tensor p = san_forward(g, mp, mh, head, false, drop);
            return scale(g, select(g, log_clamped(g, p, 1e-12), 2), -1.0);
        };
        auto res = grad_check(f, params, 1e-4, 1e-5);
        EXPECT_TRUE(res.pass) << "pairwise: " << res.worst << " " << res.max_rel_err;
    }
}
