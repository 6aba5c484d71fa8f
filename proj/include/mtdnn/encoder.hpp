#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mtdnn/data.hpp"
#include "mtdnn/error.hpp"
#include "mtdnn/rng.hpp"
#include "mtdnn/tensor.hpp"

namespace mtdnn {

// Token-id sequence ready for the encoder: [CLS] a [SEP] for singles,
// [CLS] a [SEP] b [SEP] for pairs. Segment ids are 0 up to and including the
// first [SEP], 1 after it.
struct PackedInput {
    std::vector<std::size_t> token_ids;
    std::vector<std::size_t> segment_ids;
    // Token extents of the two sentences after truncation; sentence a starts
    // at row 1, sentence b (pairs only) at row len_a + 2.
    std::size_t len_a = 0;
    std::size_t len_b = 0;

    std::size_t size() const { return token_ids.size(); }
    bool is_pair() const { return len_b > 0; }
};

inline PackedInput pack(const std::vector<std::size_t>& sentence_a,
                        const std::optional<std::vector<std::size_t>>& sentence_b,
                        const Vocabulary& vocab, std::size_t max_len = 512) {
    if (sentence_a.empty()) throw InputError("pack: empty sentence");
    const bool pair = sentence_b.has_value();
    if (pair && sentence_b->empty()) throw InputError("pack: empty sentence");
    const std::size_t overhead = pair ? 3 : 2;  // [CLS] plus [SEP] per sentence
    if (max_len < overhead + (pair ? 2 : 1)) {
        throw InputError("pack: max_len " + std::to_string(max_len) +
                         " cannot fit a packed sequence");
    }
    std::size_t len_a = sentence_a.size();
    std::size_t len_b = pair ? sentence_b->size() : 0;
    if (!pair) {
        len_a = std::min(len_a, max_len - overhead);
    } else {
        // Trim the tail of whichever sentence is longer until the pair fits;
        // ties trim sentence b.
        while (len_a + len_b + overhead > max_len) {
            if (len_a > len_b) {
                --len_a;
            } else {
                --len_b;
            }
        }
    }
    PackedInput out;
    out.len_a = len_a;
    out.len_b = len_b;
    out.token_ids.reserve(len_a + len_b + overhead);
    out.token_ids.push_back(vocab.cls_id());
    out.token_ids.insert(out.token_ids.end(), sentence_a.begin(), sentence_a.begin() + len_a);
    out.token_ids.push_back(vocab.sep_id());
    const std::size_t seg0 = out.token_ids.size();
    if (pair) {
        out.token_ids.insert(out.token_ids.end(), sentence_b->begin(),
                             sentence_b->begin() + len_b);
        out.token_ids.push_back(vocab.sep_id());
    }
    out.segment_ids.assign(out.token_ids.size(), 0);
    for (std::size_t i = seg0; i < out.segment_ids.size(); ++i) out.segment_ids[i] = 1;
    return out;
}

struct EncoderLayerParams {
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;  // attention projections, d x d (+ bias d)
    Tensor w1, b1, w2, b2;                  // feed-forward d x f, f x d
    Tensor ln1_g, ln1_b, ln2_g, ln2_b;      // post-attention / post-ffn norms
};

struct EncoderParams {
    std::size_t d = 0, n_heads = 0, max_len = 0;
    Tensor word_emb;      // V x d
    Tensor segment_emb;   // 2 x d
    Tensor position_emb;  // max_len x d
    std::vector<EncoderLayerParams> layers;

    static EncoderParams init(std::size_t vocab_size, std::size_t d, std::size_t n_layers,
                              std::size_t n_heads, std::size_t max_len, Rng& rng,
                              std::size_t ffn_mult = 4) {
        if (d == 0 || n_heads == 0 || d % n_heads != 0) {
            throw ConfigError("encoder: width " + std::to_string(d) +
                              " not divisible by head count " + std::to_string(n_heads));
        }
        if (max_len < 3 || max_len > 512) {
            throw ConfigError("encoder: max_len must be in [3, 512]");
        }
        EncoderParams p;
        p.d = d;
        p.n_heads = n_heads;
        p.max_len = max_len;
        const double sd = 0.02;
        p.word_emb = Tensor::randn({vocab_size, d}, rng, sd, true);
        p.segment_emb = Tensor::randn({2, d}, rng, sd, true);
        p.position_emb = Tensor::randn({max_len, d}, rng, sd, true);
        const std::size_t f = ffn_mult * d;
        for (std::size_t l = 0; l < n_layers; ++l) {
            EncoderLayerParams lp;
            lp.wq = Tensor::randn({d, d}, rng, sd, true);
            lp.bq = Tensor::zeros({d}, true);
            lp.wk = Tensor::randn({d, d}, rng, sd, true);
            lp.bk = Tensor::zeros({d}, true);
            lp.wv = Tensor::randn({d, d}, rng, sd, true);
            lp.bv = Tensor::zeros({d}, true);
            lp.wo = Tensor::randn({d, d}, rng, sd, true);
            lp.bo = Tensor::zeros({d}, true);
            lp.w1 = Tensor::randn({d, f}, rng, sd, true);
            lp.b1 = Tensor::zeros({f}, true);
            lp.w2 = Tensor::randn({f, d}, rng, sd, true);
            lp.b2 = Tensor::zeros({d}, true);
            lp.ln1_g = Tensor::filled({d}, 1.0, true);
            lp.ln1_b = Tensor::zeros({d}, true);
            lp.ln2_g = Tensor::filled({d}, 1.0, true);
            lp.ln2_b = Tensor::zeros({d}, true);
            p.layers.push_back(std::move(lp));
        }
        return p;
    }

    void for_each_param(const std::string& prefix,
                        const std::function<void(const std::string&, Tensor&)>& fn) {
        fn(prefix + "word_emb", word_emb);
        fn(prefix + "segment_emb", segment_emb);
        fn(prefix + "position_emb", position_emb);
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const std::string lp = prefix + "layer" + std::to_string(l) + ".";
            auto& y = layers[l];
            fn(lp + "attn_q.w", y.wq);
            fn(lp + "attn_q.b", y.bq);
            fn(lp + "attn_k.w", y.wk);
            fn(lp + "attn_k.b", y.bk);
            fn(lp + "attn_v.w", y.wv);
            fn(lp + "attn_v.b", y.bv);
            fn(lp + "attn_out.w", y.wo);
            fn(lp + "attn_out.b", y.bo);
            fn(lp + "ffn_in.w", y.w1);
            fn(lp + "ffn_in.b", y.b1);
            fn(lp + "ffn_out.w", y.w2);
            fn(lp + "ffn_out.b", y.b2);
            fn(lp + "norm_attn.gain", y.ln1_g);
            fn(lp + "norm_attn.bias", y.ln1_b);
            fn(lp + "norm_ffn.gain", y.ln2_g);
            fn(lp + "norm_ffn.bias", y.ln2_b);
        }
    }
};

// Per-layer, per-head attention weight matrices (m x m), for inspection.
struct EncoderTrace {
    std::vector<std::vector<Tensor>> attention;
};

// Sum of word, segment and position embedding rows, one row per token.
inline Tensor lexicon_encode(Graph& g, const PackedInput& input, const EncoderParams& params) {
    const std::size_t m = input.size();
    if (m == 0) throw InputError("lexicon_encode: empty input");
    if (m > params.position_emb.extent(0)) {
        throw IndexError("lexicon_encode: position " + std::to_string(m - 1) +
                         " out of range [0, " + std::to_string(params.position_emb.extent(0)) +
                         ")");
    }
    Tensor words = embedding_lookup(g, params.word_emb, input.token_ids);
    Tensor segments = embedding_lookup(g, params.segment_emb, input.segment_ids);
    Tensor positions = slice_rows(g, params.position_emb, 0, m);
    return add(g, add(g, words, segments), positions);
}

// Post-norm transformer stack over the token rows; returns contextual
// embeddings with the input's shape. `training`/`rng` are accepted for
// interface symmetry; the shared layers use no dropout.
inline Tensor transformer_encode(Graph& g, const Tensor& l1, const EncoderParams& params,
                                 bool training, Rng& rng, EncoderTrace* trace = nullptr) {
    (void)training;
    (void)rng;
    detail::require_rank("transformer_encode", l1, 2);
    const std::size_t m = l1.extent(0), d = l1.extent(1);
    if (d != params.d) {
        throw DimensionError("transformer_encode: input width " + std::to_string(d) +
                             " does not match encoder width " + std::to_string(params.d));
    }
    const std::size_t h = params.n_heads;
    const std::size_t dh = d / h;
    const double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));
    Tensor x = l1;
    if (trace) trace->attention.clear();
    for (std::size_t li = 0; li < params.layers.size(); ++li) {
        const auto& lp = params.layers[li];
        try {
            Tensor q = linear(g, x, lp.wq, lp.bq);
            Tensor k = linear(g, x, lp.wk, lp.bk);
            Tensor v = linear(g, x, lp.wv, lp.bv);
            std::vector<Tensor> head_ctx;
            std::vector<Tensor> head_attn;
            for (std::size_t hi = 0; hi < h; ++hi) {
                Tensor qh = slice_cols(g, q, hi * dh, dh);
                Tensor kh = slice_cols(g, k, hi * dh, dh);
                Tensor vh = slice_cols(g, v, hi * dh, dh);
                Tensor scores = scale(g, matmul(g, qh, transpose(g, kh)), att_scale);
                Tensor attn = softmax(g, scores, 1);
                head_attn.push_back(attn);
                head_ctx.push_back(matmul(g, attn, vh));
            }
            if (trace) trace->attention.push_back(std::move(head_attn));
            Tensor ctx = h == 1 ? head_ctx[0] : concat(g, head_ctx, 1);
            Tensor attn_out = linear(g, ctx, lp.wo, lp.bo);
            x = layer_norm(g, add(g, x, attn_out), lp.ln1_g, lp.ln1_b, 1e-5);
            Tensor ffn = linear(g, gelu(g, linear(g, x, lp.w1, lp.b1)), lp.w2, lp.b2);
            x = layer_norm(g, add(g, x, ffn), lp.ln2_g, lp.ln2_b, 1e-5);
        } catch (const NumericError& e) {
            throw NumericError("encoder layer " + std::to_string(li) + ": " + e.what());
        }
    }
    (void)m;
    return x;
}

// Contextual embedding of the leading [CLS] token.
inline Tensor cls_vector(Graph& g, const Tensor& contextual) {
    return take_row(g, contextual, 0);
}

}  // namespace mtdnn
