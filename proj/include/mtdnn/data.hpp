#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "mtdnn/error.hpp"
#include "mtdnn/rng.hpp"
#include "mtdnn/task.hpp"

namespace mtdnn {

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

// Token inventory: one token per line, id = line number. Subword continuation
// pieces carry the "##" prefix. The four reserved tokens must all be present.
class Vocabulary {
public:
    static constexpr const char* pad_token = "[PAD]";
    static constexpr const char* unk_token = "[UNK]";
    static constexpr const char* cls_token = "[CLS]";
    static constexpr const char* sep_token = "[SEP]";

    static Vocabulary from_tokens(std::vector<std::string> tokens) {
        Vocabulary v;
        v.tokens_ = std::move(tokens);
        for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
            if (v.tokens_[i].empty()) {
                throw ValidationError("vocabulary: empty token at id " + std::to_string(i));
            }
            if (!v.ids_.emplace(v.tokens_[i], i).second) {
                throw ValidationError("vocabulary: duplicate token '" + v.tokens_[i] + "'");
            }
        }
        for (const char* special : {pad_token, unk_token, cls_token, sep_token}) {
            if (!v.contains(special)) {
                throw ValidationError("vocabulary: missing special token " + std::string(special));
            }
        }
        return v;
    }

    static Vocabulary load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw InputError("vocabulary: cannot open " + path);
        std::vector<std::string> tokens;
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            tokens.push_back(line);
        }
        return from_tokens(std::move(tokens));
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw InputError("vocabulary: cannot write " + path);
        for (const auto& t : tokens_) out << t << '\n';
    }

    std::size_t size() const { return tokens_.size(); }
    bool contains(const std::string& t) const { return ids_.count(t) != 0; }

    std::size_t id_of(const std::string& t) const {
        auto it = ids_.find(t);
        if (it == ids_.end()) throw InputError("vocabulary: token '" + t + "' not present");
        return it->second;
    }

    const std::string& token(std::size_t id) const {
        if (id >= tokens_.size()) {
            throw IndexError("vocabulary: id " + std::to_string(id) + " out of range");
        }
        return tokens_[id];
    }

    std::size_t pad_id() const { return id_of(pad_token); }
    std::size_t unk_id() const { return id_of(unk_token); }
    std::size_t cls_id() const { return id_of(cls_token); }
    std::size_t sep_id() const { return id_of(sep_token); }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::size_t> ids_;
};

// Whitespace pre-split, then greedy longest-match subword segmentation per
// word with "##" continuation pieces; a word with no matchable prefix maps to
// the single [UNK] id. Pure and total.
inline std::vector<std::size_t> tokenize(const std::string& text, const Vocabulary& vocab) {
    std::vector<std::size_t> out;
    const std::size_t unk = vocab.unk_id();
    std::istringstream words(text);
    std::string word;
    while (words >> word) {
        std::vector<std::size_t> pieces;
        std::size_t start = 0;
        bool ok = true;
        while (start < word.size()) {
            std::size_t end = word.size();
            bool found = false;
            while (end > start) {
                std::string sub = word.substr(start, end - start);
                if (start > 0) sub = "##" + sub;
                if (vocab.contains(sub)) {
                    pieces.push_back(vocab.id_of(sub));
                    found = true;
                    break;
                }
                --end;
            }
            if (!found) {
                ok = false;
                break;
            }
            start = end;
        }
        if (ok) {
            out.insert(out.end(), pieces.begin(), pieces.end());
        } else {
            out.push_back(unk);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Examples and dataset splits
// ---------------------------------------------------------------------------

struct SingleSentence {
    std::string text;
    std::size_t label = 0;
    bool operator==(const SingleSentence&) const = default;
};

struct PairSentence {
    std::string text_a, text_b;
    std::size_t label = 0;
    bool operator==(const PairSentence&) const = default;
};

struct RegressionPair {
    std::string text_a, text_b;
    double y = 0.0;
    bool operator==(const RegressionPair&) const = default;
};

struct RankingCandidate {
    std::string text;
    bool is_positive = false;
    bool operator==(const RankingCandidate&) const = default;
};

struct RankingQuery {
    std::string query_id;
    std::string query;
    std::vector<RankingCandidate> candidates;  // exactly one positive
    bool operator==(const RankingQuery&) const = default;
};

using Example = std::variant<SingleSentence, PairSentence, RegressionPair, RankingQuery>;

enum class Split { train, dev, test };

inline const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::dev: return "dev";
        case Split::test: return "test";
    }
    throw ContractError("split_name: unknown split");
}

struct DatasetSplit {
    std::string task_name;
    Split split = Split::train;
    std::vector<Example> examples;
    bool operator==(const DatasetSplit&) const = default;
};

inline bool example_matches(const Example& ex, TaskType type) {
    switch (type) {
        case TaskType::single_classification:
            return std::holds_alternative<SingleSentence>(ex);
        case TaskType::pair_classification:
            return std::holds_alternative<PairSentence>(ex);
        case TaskType::regression:
            return std::holds_alternative<RegressionPair>(ex);
        case TaskType::ranking:
            return std::holds_alternative<RankingQuery>(ex);
    }
    return false;
}

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            cols.push_back(line.substr(start));
            return cols;
        }
        cols.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

inline ParseError bad_line(const std::string& path, std::size_t lineno, const std::string& why) {
    return ParseError(path + ":" + std::to_string(lineno) + ": " + why);
}

}  // namespace detail

// Tab-separated layouts per task type:
//   single:     label \t text
//   pair:       label \t text_a \t text_b
//   regression: y \t text_a \t text_b
//   ranking:    query_id \t is_positive(0/1) \t query \t candidate
// Ranking rows are grouped by query_id (order of first appearance); each
// group must agree on the query text and contain exactly one positive.
inline DatasetSplit load_tsv(const std::string& path, const TaskSpec& spec,
                             Split split = Split::train) {
    std::ifstream in(path);
    if (!in) throw InputError("dataset: cannot open " + path);
    DatasetSplit ds;
    ds.task_name = spec.name;
    ds.split = split;

    std::vector<std::string> group_order;  // ranking query ids, first appearance
    std::unordered_map<std::string, RankingQuery> groups;

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto cols = detail::split_tabs(line);
        const auto expect = [&](std::size_t n) {
            if (cols.size() != n) {
                throw detail::bad_line(path, lineno,
                                       "expected " + std::to_string(n) + " columns, got " +
                                           std::to_string(cols.size()));
            }
        };
        switch (spec.type) {
            case TaskType::single_classification: {
                expect(2);
                SingleSentence ex;
                try {
                    ex.label = spec.label_index(cols[0]);
                } catch (const ValidationError& e) {
                    throw detail::bad_line(path, lineno, e.what());
                }
                ex.text = cols[1];
                ds.examples.emplace_back(std::move(ex));
                break;
            }
            case TaskType::pair_classification: {
                expect(3);
                PairSentence ex;
                try {
                    ex.label = spec.label_index(cols[0]);
                } catch (const ValidationError& e) {
                    throw detail::bad_line(path, lineno, e.what());
                }
                ex.text_a = cols[1];
                ex.text_b = cols[2];
                ds.examples.emplace_back(std::move(ex));
                break;
            }
            case TaskType::regression: {
                expect(3);
                RegressionPair ex;
                try {
                    std::size_t used = 0;
                    ex.y = std::stod(cols[0], &used);
                    if (used != cols[0].size()) throw std::invalid_argument("trailing characters");
                } catch (const std::exception&) {
                    throw detail::bad_line(path, lineno, "bad real label '" + cols[0] + "'");
                }
                if (!std::isfinite(ex.y)) {
                    throw detail::bad_line(path, lineno, "non-finite label");
                }
                ex.text_a = cols[1];
                ex.text_b = cols[2];
                ds.examples.emplace_back(std::move(ex));
                break;
            }
            case TaskType::ranking: {
                expect(4);
                if (cols[1] != "0" && cols[1] != "1") {
                    throw detail::bad_line(path, lineno,
                                           "is_positive must be 0 or 1, got '" + cols[1] + "'");
                }
                auto [it, inserted] = groups.try_emplace(cols[0]);
                if (inserted) {
                    it->second.query_id = cols[0];
                    it->second.query = cols[2];
                    group_order.push_back(cols[0]);
                } else if (it->second.query != cols[2]) {
                    throw detail::bad_line(path, lineno,
                                           "query text differs within query_id " + cols[0]);
                }
                it->second.candidates.push_back({cols[3], cols[1] == "1"});
                break;
            }
        }
    }
    if (spec.type == TaskType::ranking) {
        for (const auto& qid : group_order) {
            RankingQuery& q = groups[qid];
            std::size_t positives = 0;
            for (const auto& c : q.candidates) positives += c.is_positive;
            if (positives != 1) {
                throw ValidationError("dataset " + path + ": query " + qid + " has " +
                                      std::to_string(positives) + " positives, expected 1");
            }
            ds.examples.emplace_back(std::move(q));
        }
    }
    if (split == Split::train && ds.examples.empty()) {
        throw ValidationError("dataset " + path + ": empty train split");
    }
    return ds;
}

inline void save_tsv(const std::string& path, const DatasetSplit& ds, const TaskSpec& spec) {
    std::ofstream out(path);
    if (!out) throw InputError("dataset: cannot write " + path);
    const auto fmt_real = [](double v) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const Example& e : ds.examples) {
        switch (spec.type) {
            case TaskType::single_classification: {
                const auto& ex = std::get<SingleSentence>(e);
                out << spec.labels.at(ex.label) << '\t' << ex.text << '\n';
                break;
            }
            case TaskType::pair_classification: {
                const auto& ex = std::get<PairSentence>(e);
                out << spec.labels.at(ex.label) << '\t' << ex.text_a << '\t' << ex.text_b << '\n';
                break;
            }
            case TaskType::regression: {
                const auto& ex = std::get<RegressionPair>(e);
                out << fmt_real(ex.y) << '\t' << ex.text_a << '\t' << ex.text_b << '\n';
                break;
            }
            case TaskType::ranking: {
                const auto& ex = std::get<RankingQuery>(e);
                for (const auto& c : ex.candidates) {
                    out << ex.query_id << '\t' << (c.is_positive ? 1 : 0) << '\t' << ex.query
                        << '\t' << c.text << '\n';
                }
                break;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Subsampling
// ---------------------------------------------------------------------------

inline bool valid_sample_fraction(double f) {
    return f == 0.001 || f == 0.01 || f == 0.1 || f == 1.0;
}

inline std::size_t subsample_size(std::size_t n, double fraction) {
    if (!valid_sample_fraction(fraction)) {
        throw ConfigError("subsample: fraction must be one of 0.001, 0.01, 0.1, 1.0");
    }
    return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
}

// Uniform sample of floor(fraction*N) training examples without replacement,
// original relative order preserved.
inline DatasetSplit subsample(const DatasetSplit& ds, double fraction, Rng& rng) {
    if (ds.split != Split::train) throw ValidationError("subsample: train split required");
    const std::size_t k = subsample_size(ds.examples.size(), fraction);
    if (k == 0) throw ValidationError("subsample: resulting dataset would be empty");
    std::vector<std::size_t> idx(ds.examples.size());
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(idx);
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    DatasetSplit out;
    out.task_name = ds.task_name;
    out.split = ds.split;
    out.examples.reserve(k);
    for (std::size_t i : idx) out.examples.push_back(ds.examples[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic tasks
// ---------------------------------------------------------------------------

// Synthetic vocabulary: the four reserved tokens then w0, w1, ... The first
// eight word tokens (w0..w7) act as class/relevance markers, the rest as
// filler, so generated labels stay recomputable from the text alone.
inline Vocabulary synthetic_vocab(std::size_t vocab_size) {
    if (vocab_size < 24) throw ConfigError("synthetic_vocab: need at least 24 tokens");
    std::vector<std::string> tokens = {Vocabulary::pad_token, Vocabulary::unk_token,
                                       Vocabulary::cls_token, Vocabulary::sep_token};
    for (std::size_t i = 4; i < vocab_size; ++i) {
        tokens.push_back("w" + std::to_string(i - 4));
    }
    return Vocabulary::from_tokens(std::move(tokens));
}

constexpr std::size_t synthetic_n_markers = 8;

inline TaskSpec synthetic_task_spec(TaskType type, const std::string& name) {
    TaskSpec spec;
    spec.name = name;
    spec.type = type;
    switch (type) {
        case TaskType::single_classification:
            spec.labels = {"0", "1"};
            spec.metrics = {"accuracy"};
            break;
        case TaskType::pair_classification:
            spec.labels = {"0", "1", "2"};
            spec.metrics = {"accuracy"};
            break;
        case TaskType::regression:
            spec.metrics = {"pearson", "spearman"};
            break;
        case TaskType::ranking:
            spec.metrics = {"accuracy"};
            break;
    }
    return spec;
}

namespace detail {

inline std::string marker_word(std::size_t m) { return "w" + std::to_string(m); }

// Filler word tokens start after the marker block.
inline std::vector<std::size_t> filler_pool(std::size_t vocab_size) {
    std::vector<std::size_t> pool;
    for (std::size_t w = synthetic_n_markers; w + 4 < vocab_size; ++w) pool.push_back(w);
    return pool;
}

inline std::string join_words(const std::vector<std::size_t>& ws) {
    std::string s;
    for (std::size_t i = 0; i < ws.size(); ++i) {
        if (i) s += ' ';
        s += "w" + std::to_string(ws[i]);
    }
    return s;
}

}  // namespace detail

// Generators with learnable structure; every label is recomputable from the
// generated text. `marker` picks which of the eight marker words the
// single-classification generator keys on, so several related tasks can be
// built over one vocabulary.
inline DatasetSplit make_synthetic(TaskType kind, std::size_t size, std::size_t vocab_size,
                                   Rng& rng, std::size_t marker = 0) {
    if (size < 1) throw ConfigError("make_synthetic: size must be >= 1");
    if (vocab_size < 24) throw ConfigError("make_synthetic: vocab_size must be >= 24");
    if (marker >= synthetic_n_markers) {
        throw ConfigError("make_synthetic: marker must be < " +
                          std::to_string(synthetic_n_markers));
    }
    const std::vector<std::size_t> pool = detail::filler_pool(vocab_size);
    const std::size_t sent_len = 6;
    DatasetSplit ds;
    ds.split = Split::train;
    const auto draw_fillers = [&](std::size_t n) {
        std::vector<std::size_t> p = pool;
        rng.shuffle(p);
        p.resize(n);
        return p;
    };
    switch (kind) {
        case TaskType::single_classification: {
            ds.task_name = "synthetic_single";
            for (std::size_t i = 0; i < size; ++i) {
                const std::size_t label = i % 2;
                std::vector<std::size_t> words = draw_fillers(sent_len);
                std::string text = detail::join_words(words);
                if (label == 1) {
                    // splice the marker word into a random slot
                    std::vector<std::string> parts;
                    parts.reserve(sent_len + 1);
                    for (std::size_t w : words) parts.push_back("w" + std::to_string(w));
                    parts.insert(parts.begin() + static_cast<std::ptrdiff_t>(
                                                     rng.below(parts.size() + 1)),
                                 detail::marker_word(marker));
                    text.clear();
                    for (std::size_t j = 0; j < parts.size(); ++j) {
                        if (j) text += ' ';
                        text += parts[j];
                    }
                }
                ds.examples.emplace_back(SingleSentence{text, label});
            }
            break;
        }
        case TaskType::pair_classification: {
            ds.task_name = "synthetic_pair";
            for (std::size_t i = 0; i < size; ++i) {
                const std::size_t label = i % 3;
                const std::size_t overlap = label * 3;  // 0, 3 or 6 shared words
                std::vector<std::size_t> p = pool;
                rng.shuffle(p);
                std::vector<std::size_t> a(p.begin(), p.begin() + sent_len);
                std::vector<std::size_t> b(a.begin(), a.begin() + overlap);
                b.insert(b.end(), p.begin() + sent_len,
                         p.begin() + sent_len + (sent_len - overlap));
                rng.shuffle(b);
                ds.examples.emplace_back(
                    PairSentence{detail::join_words(a), detail::join_words(b), label});
            }
            break;
        }
        case TaskType::regression: {
            ds.task_name = "synthetic_regression";
            for (std::size_t i = 0; i < size; ++i) {
                const std::size_t overlap = rng.below(sent_len + 1);
                std::vector<std::size_t> p = pool;
                rng.shuffle(p);
                std::vector<std::size_t> a(p.begin(), p.begin() + sent_len);
                std::vector<std::size_t> b(a.begin(), a.begin() + overlap);
                b.insert(b.end(), p.begin() + sent_len,
                         p.begin() + sent_len + (sent_len - overlap));
                rng.shuffle(b);
                const double y =
                    static_cast<double>(overlap) / static_cast<double>(sent_len);  // in [0,1]
                ds.examples.emplace_back(
                    RegressionPair{detail::join_words(a), detail::join_words(b), y});
            }
            break;
        }
        case TaskType::ranking: {
            ds.task_name = "synthetic_ranking";
            for (std::size_t i = 0; i < size; ++i) {
                const std::size_t m = rng.below(synthetic_n_markers);
                std::vector<std::size_t> others;
                for (std::size_t j = 0; j < synthetic_n_markers; ++j) {
                    if (j != m) others.push_back(j);
                }
                rng.shuffle(others);
                const auto with_marker = [&](std::size_t mk) {
                    std::vector<std::size_t> fill = draw_fillers(3);
                    std::string s = detail::join_words(fill);
                    const std::size_t pos = rng.below(4);
                    std::vector<std::string> parts;
                    for (std::size_t w : fill) parts.push_back("w" + std::to_string(w));
                    parts.insert(parts.begin() + static_cast<std::ptrdiff_t>(pos),
                                 detail::marker_word(mk));
                    s.clear();
                    for (std::size_t j2 = 0; j2 < parts.size(); ++j2) {
                        if (j2) s += ' ';
                        s += parts[j2];
                    }
                    return s;
                };
                RankingQuery q;
                q.query_id = "q" + std::to_string(i);
                q.query = with_marker(m);
                q.candidates.push_back({with_marker(m), true});
                for (std::size_t j = 0; j < 3; ++j) {
                    q.candidates.push_back({with_marker(others[j]), false});
                }
                rng.shuffle(q.candidates);
                ds.examples.emplace_back(std::move(q));
            }
            break;
        }
    }
    return ds;
}

}  // namespace mtdnn
