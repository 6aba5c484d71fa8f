#include <gtest/gtest.h>

#include <cmath>
#include <optional>
#include <vector>

#include "mtdnn/encoder.hpp"
#include "mtdnn/grad_check.hpp"

using namespace mtdnn;

namespace {

Vocabulary words_vocab() { return synthetic_vocab(30); }

// ---- straight-line reference implementation pieces (plain loops) ----------

using Mat = std::vector<std::vector<double>>;

Mat mat_linear(const Mat& x, const Mat& w, const std::vector<double>& b) {
    Mat out(x.size(), std::vector<double>(b.size(), 0.0));
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            double acc = b[j];
            for (std::size_t p = 0; p < w.size(); ++p) acc += x[i][p] * w[p][j];
            out[i][j] = acc;
        }
    }
    return out;
}

void softmax_rows(Mat& m) {
    for (auto& row : m) {
        double mx = row[0];
        for (double v : row) mx = std::max(mx, v);
        double denom = 0.0;
        for (double& v : row) {
            v = std::exp(v - mx);
            denom += v;
        }
        for (double& v : row) v /= denom;
    }
}

void layer_norm_rows(Mat& m, const std::vector<double>& gain, const std::vector<double>& bias,
                     double eps) {
    for (auto& row : m) {
        double mu = 0.0;
        for (double v : row) mu += v;
        mu /= row.size();
        double var = 0.0;
        for (double v : row) var += (v - mu) * (v - mu);
        var /= row.size();
        const double is = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < row.size(); ++j) {
            row[j] = gain[j] * (row[j] - mu) * is + bias[j];
        }
    }
}

double gelu_ref(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

Mat tensor_rows(const Tensor& t) {
    Mat out(t.extent(0), std::vector<double>(t.extent(1)));
    for (std::size_t i = 0; i < t.extent(0); ++i) {
        for (std::size_t j = 0; j < t.extent(1); ++j) out[i][j] = t.at(i, j);
    }
    return out;
}

// Deterministic small-weight fill so the reference needs no shared RNG.
void pattern_fill(Tensor& t, int salt) {
    for (std::size_t i = 0; i < t.numel(); ++i) {
        t.at(i) = 0.01 * static_cast<double>(static_cast<int>((i * 7 + salt) % 11) - 5);
    }
}

}  // namespace

TEST(pack, single_sentence_layout) {
    Vocabulary v = words_vocab();
    PackedInput p = pack({5, 6}, std::nullopt, v);
    EXPECT_EQ(p.token_ids, (std::vector<std::size_t>{v.cls_id(), 5, 6, v.sep_id()}));
    EXPECT_EQ(p.segment_ids, (std::vector<std::size_t>{0, 0, 0, 0}));
    EXPECT_EQ(p.len_a, 2u);
    EXPECT_FALSE(p.is_pair());
}

TEST(pack, pair_layout_and_segments) {
    Vocabulary v = words_vocab();
    PackedInput p = pack({5}, std::vector<std::size_t>{6}, v);
    EXPECT_EQ(p.token_ids,
              (std::vector<std::size_t>{v.cls_id(), 5, v.sep_id(), 6, v.sep_id()}));
    EXPECT_EQ(p.segment_ids, (std::vector<std::size_t>{0, 0, 0, 1, 1}));
    EXPECT_TRUE(p.is_pair());
    EXPECT_EQ(p.len_b, 1u);
}

TEST(pack, single_truncated_to_max_len) {
    Vocabulary v = words_vocab();
    std::vector<std::size_t> longs(600, 5);
    PackedInput p = pack(longs, std::nullopt, v, 512);
    EXPECT_EQ(p.size(), 512u);
    EXPECT_EQ(p.token_ids[0], v.cls_id());
    EXPECT_EQ(p.token_ids.back(), v.sep_id());
    EXPECT_EQ(p.len_a, 510u);
}

TEST(pack, pair_truncation_trims_longer_tail) {
    Vocabulary v = words_vocab();
    std::vector<std::size_t> a = {10, 11, 12, 13, 14, 15};
    std::vector<std::size_t> b = {20, 21};
    PackedInput p = pack(a, b, v, 9);  // room for 6 sentence tokens
    EXPECT_EQ(p.size(), 9u);
    EXPECT_EQ(p.len_a, 4u);  // a lost its tail
    EXPECT_EQ(p.len_b, 2u);
    EXPECT_EQ(p.token_ids[4], 13u);  // surviving prefix of a
    // tie: equal lengths trim b first
    PackedInput q = pack({10, 11}, std::vector<std::size_t>{20, 21}, v, 6);
    EXPECT_EQ(q.len_a, 2u);
    EXPECT_EQ(q.len_b, 1u);
}

TEST(pack, rejects_empty_and_tiny_max_len) {
    Vocabulary v = words_vocab();
    EXPECT_THROW(pack({}, std::nullopt, v), InputError);
    EXPECT_THROW(pack({5}, std::vector<std::size_t>{}, v), InputError);
    EXPECT_THROW(pack({5}, std::nullopt, v, 2), InputError);
    EXPECT_THROW(pack({5}, std::vector<std::size_t>{6}, v, 4), InputError);
}

TEST(pack, invariants_over_random_inputs) {
    Vocabulary v = words_vocab();
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::size_t> a(1 + rng.below(40), 5);
        std::optional<std::vector<std::size_t>> b;
        if (rng.below(2) == 1) b = std::vector<std::size_t>(1 + rng.below(40), 6);
        const std::size_t max_len = 5 + rng.below(30);
        PackedInput p = pack(a, b, v, max_len);
        ASSERT_LE(p.size(), max_len);
        ASSERT_LE(p.size(), 512u);
        EXPECT_EQ(p.token_ids[0], v.cls_id());
        for (std::size_t i = 1; i < p.segment_ids.size(); ++i) {
            ASSERT_GE(p.segment_ids[i], p.segment_ids[i - 1]);  // non-decreasing
            ASSERT_LE(p.segment_ids[i], 1u);
        }
        if (b) EXPECT_GE(p.len_b, 1u);
    }
}

TEST(lexicon, zero_tables_give_zero_rows) {
    Rng rng(1);
    EncoderParams p = EncoderParams::init(10, 4, 0, 1, 8, rng);
    for (auto& v : p.word_emb.data()) v = 0.0;
    for (auto& v : p.segment_emb.data()) v = 0.0;
    for (auto& v : p.position_emb.data()) v = 0.0;
    PackedInput in;
    in.token_ids = {2, 5, 3};
    in.segment_ids = {0, 0, 0};
    Graph g;
    Tensor out = lexicon_encode(g, in, p);
    for (std::size_t i = 0; i < out.numel(); ++i) EXPECT_DOUBLE_EQ(out.at(i), 0.0);
}

TEST(lexicon, one_hot_rows_sum) {
    Rng rng(1);
    EncoderParams p = EncoderParams::init(10, 4, 0, 1, 8, rng);
    for (auto& v : p.word_emb.data()) v = 0.0;
    for (auto& v : p.segment_emb.data()) v = 0.0;
    for (auto& v : p.position_emb.data()) v = 0.0;
    p.word_emb.at(5, 0) = 1.0;      // e1 for word 5
    p.segment_emb.at(0, 1) = 1.0;   // e2 for segment 0
    p.position_emb.at(0, 2) = 1.0;  // e3 for position 0
    PackedInput in;
    in.token_ids = {5};
    in.segment_ids = {0};
    Graph g;
    Tensor out = lexicon_encode(g, in, p);
    EXPECT_DOUBLE_EQ(out.at(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(out.at(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(out.at(0, 2), 1.0);
    EXPECT_DOUBLE_EQ(out.at(0, 3), 0.0);
}

TEST(lexicon, random_tables_match_row_sums) {
    Rng rng(9);
    EncoderParams p = EncoderParams::init(12, 6, 0, 1, 8, rng);
    PackedInput in;
    in.token_ids = {2, 7, 7, 3};
    in.segment_ids = {0, 0, 1, 1};
    Graph g;
    Tensor out = lexicon_encode(g, in, p);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 6; ++j) {
            const double want = p.word_emb.at(in.token_ids[i], j) +
                                p.segment_emb.at(in.segment_ids[i], j) +
                                p.position_emb.at(i, j);
            EXPECT_NEAR(out.at(i, j), want, 1e-12);
        }
    }
}

TEST(lexicon, out_of_range_ids) {
    Rng rng(1);
    EncoderParams p = EncoderParams::init(10, 4, 0, 1, 4, rng);
    Graph g;
    PackedInput bad_word;
    bad_word.token_ids = {99};
    bad_word.segment_ids = {0};
    EXPECT_THROW(lexicon_encode(g, bad_word, p), IndexError);
    PackedInput too_long;
    too_long.token_ids = {2, 5, 5, 5, 3};
    too_long.segment_ids = {0, 0, 0, 0, 0};
    EXPECT_THROW(lexicon_encode(g, too_long, p), IndexError);  // beyond position table
    PackedInput empty;
    EXPECT_THROW(lexicon_encode(g, empty, p), InputError);
}

TEST(encoder, zero_layers_is_identity) {
    Rng rng(2);
    EncoderParams p = EncoderParams::init(10, 4, 0, 2, 8, rng);
    Tensor x = Tensor::from({3, 4}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
    Graph g;
    Rng drop(1);
    Tensor out = transformer_encode(g, x, p, false, drop);
    for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_DOUBLE_EQ(out.at(i), x.at(i));
}

TEST(encoder, single_token_attention_is_one) {
    Rng rng(3);
    EncoderParams p = EncoderParams::init(10, 8, 2, 2, 8, rng);
    Tensor x = Tensor::randn({1, 8}, rng, 1.0);
    Graph g;
    Rng drop(1);
    EncoderTrace trace;
    Tensor out = transformer_encode(g, x, p, false, drop, &trace);
    EXPECT_EQ(out.shape(), (Shape{1, 8}));
    ASSERT_EQ(trace.attention.size(), 2u);
    for (const auto& layer : trace.attention) {
        ASSERT_EQ(layer.size(), 2u);
        for (const auto& head : layer) {
            ASSERT_EQ(head.numel(), 1u);
            EXPECT_DOUBLE_EQ(head.at(0), 1.0);
        }
    }
}

TEST(encoder, attention_rows_sum_to_one) {
    Rng rng(4);
    EncoderParams p = EncoderParams::init(20, 8, 3, 4, 16, rng);
    Tensor x = Tensor::randn({7, 8}, rng, 1.0);
    Graph g;
    Rng drop(1);
    EncoderTrace trace;
    (void)transformer_encode(g, x, p, false, drop, &trace);
    for (const auto& layer : trace.attention) {
        for (const auto& head : layer) {
            ASSERT_EQ(head.shape(), (Shape{7, 7}));
            for (std::size_t i = 0; i < 7; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < 7; ++j) s += head.at(i, j);
                EXPECT_NEAR(s, 1.0, 1e-12);
            }
        }
    }
}

TEST(encoder, one_layer_matches_reference_implementation) {
    Rng rng(5);
    EncoderParams p = EncoderParams::init(10, 4, 1, 1, 8, rng);
    auto& lp = p.layers[0];
    int salt = 1;
    for (Tensor* t : {&lp.wq, &lp.bq, &lp.wk, &lp.bk, &lp.wv, &lp.bv, &lp.wo, &lp.bo, &lp.w1,
                      &lp.b1, &lp.w2, &lp.b2, &lp.ln1_g, &lp.ln1_b, &lp.ln2_g, &lp.ln2_b}) {
        pattern_fill(*t, salt++);
    }
    for (auto& v : lp.ln1_g.data()) v += 1.0;  // keep gains near 1
    for (auto& v : lp.ln2_g.data()) v += 1.0;
    Tensor x = Tensor::zeros({4, 4});
    pattern_fill(x, 99);

    Graph g;
    Rng drop(1);
    Tensor out = transformer_encode(g, x, p, false, drop);

    // reference: plain-loop single-head layer
    const auto W = [](const Tensor& t) { return tensor_rows(t); };
    const auto B = [](const Tensor& t) {
        return std::vector<double>(t.data().begin(), t.data().end());
    };
    Mat xm = tensor_rows(x);
    Mat q = mat_linear(xm, W(lp.wq), B(lp.bq));
    Mat k = mat_linear(xm, W(lp.wk), B(lp.bk));
    Mat v = mat_linear(xm, W(lp.wv), B(lp.bv));
    Mat scores(4, std::vector<double>(4));
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            double acc = 0.0;
            for (int pth = 0; pth < 4; ++pth) acc += q[i][pth] * k[j][pth];
            scores[i][j] = acc / 2.0;  // 1/sqrt(4)
        }
    }
    softmax_rows(scores);
    Mat ctx = mat_linear(scores, v, std::vector<double>(4, 0.0));
    Mat attn_out = mat_linear(ctx, W(lp.wo), B(lp.bo));
    Mat h1 = xm;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) h1[i][j] += attn_out[i][j];
    }
    layer_norm_rows(h1, B(lp.ln1_g), B(lp.ln1_b), 1e-5);
    Mat f = mat_linear(h1, W(lp.w1), B(lp.b1));
    for (auto& row : f) {
        for (double& vv : row) vv = gelu_ref(vv);
    }
    Mat f2 = mat_linear(f, W(lp.w2), B(lp.b2));
    Mat h2 = h1;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) h2[i][j] += f2[i][j];
    }
    layer_norm_rows(h2, B(lp.ln2_g), B(lp.ln2_b), 1e-5);

    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) EXPECT_NEAR(out.at(i, j), h2[i][j], 1e-10);
    }
}

TEST(encoder, shapes_and_finiteness_across_lengths) {
    Rng rng(6);
    EncoderParams p = EncoderParams::init(16, 8, 2, 2, 64, rng);
    for (std::size_t m : {1u, 2u, 17u, 64u}) {
        std::vector<std::size_t> ids(m, 5);
        std::vector<std::size_t> segs(m, 0);
        PackedInput in{ids, segs, m, 0};
        Graph g;
        Rng drop(1);
        Tensor out = transformer_encode(g, lexicon_encode(g, in, p), p, false, drop);
        ASSERT_EQ(out.shape(), (Shape{m, 8}));
        for (std::size_t i = 0; i < out.numel(); ++i) ASSERT_TRUE(std::isfinite(out.at(i)));
    }
}

TEST(encoder, repeat_encode_bitwise_identical) {
    Rng rng(7);
    EncoderParams p = EncoderParams::init(16, 8, 2, 2, 16, rng);
    PackedInput in;
    in.token_ids = {2, 5, 6, 3};
    in.segment_ids = {0, 0, 0, 0};
    auto run = [&] {
        Graph g;
        Rng drop(11);
        Tensor out = transformer_encode(g, lexicon_encode(g, in, p), p, true, drop);
        return std::vector<double>(out.data().begin(), out.data().end());
    };
    const auto a = run(), b = run();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(encoder, cls_vector_is_row_zero) {
    Graph g;
    Tensor c = Tensor::from({2, 4}, {1, 2, 3, 4, 5, 6, 7, 8});
    Tensor x = cls_vector(g, c);
    EXPECT_EQ(x.shape(), Shape{4});
    for (std::size_t j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(x.at(j), c.at(0, j));
    Tensor one = Tensor::from({1, 2}, {9, 10});
    Tensor y = cls_vector(g, one);
    EXPECT_DOUBLE_EQ(y.at(1), 10.0);
}

TEST(encoder, width_must_divide_heads) {
    Rng rng(8);
    EXPECT_THROW(EncoderParams::init(10, 6, 1, 4, 8, rng), ConfigError);
    EXPECT_THROW(EncoderParams::init(10, 8, 1, 2, 600, rng), ConfigError);
    EncoderParams p = EncoderParams::init(10, 8, 1, 2, 8, rng);
    Graph g;
    Rng drop(1);
    EXPECT_THROW(transformer_encode(g, Tensor::zeros({2, 6}), p, false, drop), DimensionError);
}

TEST(encoder, named_params_unique_and_trainable) {
    Rng rng(10);
    EncoderParams p = EncoderParams::init(10, 8, 2, 2, 8, rng);
    std::vector<std::string> names;
    p.for_each_param("encoder.", [&](const std::string& n, Tensor& t) {
        names.push_back(n);
        EXPECT_TRUE(t.requires_grad());
    });
    EXPECT_EQ(names.size(), 3u + 2u * 16u);
    std::sort(names.begin(), names.end());
    EXPECT_EQ(std::adjacent_find(names.begin(), names.end()), names.end());
}

TEST(encoder, end_to_end_gradients_match_finite_differences) {
    Rng rng(12);
    EncoderParams p = EncoderParams::init(8, 8, 2, 2, 8, rng);
    // Randomize every parameter (including norm gains/biases) so no gradient
    // path is structurally zero under a uniform upstream.
    std::vector<Tensor> params;
    p.for_each_param("e.", [&](const std::string&, Tensor& t) {
        for (auto& v : t.data()) v = rng.normal(0.2);
        params.push_back(t);
    });
    PackedInput in;
    in.token_ids = {2, 5, 6, 3};
    in.segment_ids = {0, 0, 1, 1};
    Tensor w = Tensor::zeros({4, 8});
    Rng wr(13);
    for (auto& v : w.data()) v = wr.normal(1.0);
    auto f = [&](Graph& g) {
        Rng drop(1);
        Tensor c = transformer_encode(g, lexicon_encode(g, in, p), p, false, drop);
        return sum(g, mul(g, c, w));
    };
    auto res = grad_check(f, params, 1e-4, 1e-5);
    EXPECT_TRUE(res.pass) << res.worst << " rel err " << res.max_rel_err;
}
