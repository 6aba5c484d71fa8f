#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "mtdnn/error.hpp"
#include "mtdnn/tensor.hpp"

namespace mtdnn {

// On-disk model state: the 8-byte magic "MTDNNCK1", a text manifest with one
// "name<TAB>dim1,dim2,..." line per entry terminated by a blank line, then
// the entries' values as little-endian 64-bit floats in manifest order.

inline constexpr char checkpoint_magic[8] = {'M', 'T', 'D', 'N', 'N', 'C', 'K', '1'};

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

namespace detail {

inline void put_f64_le(std::ofstream& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(bytes, 8);
}

inline double get_f64_le(std::ifstream& in) {
    char bytes[8];
    if (!in.read(bytes, 8)) throw CheckpointError("checkpoint: truncated value payload");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
    }
    return std::bit_cast<double>(bits);
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const NamedTensors& entries) {
    for (const auto& [name, t] : entries) {
        if (name.empty() || name.find('\t') != std::string::npos ||
            name.find('\n') != std::string::npos) {
            throw ContractError("checkpoint: invalid entry name '" + name + "'");
        }
        (void)t;
    }
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw CheckpointError("checkpoint: cannot write " + tmp);
        out.write(checkpoint_magic, sizeof checkpoint_magic);
        for (const auto& [name, t] : entries) {
            out << name << '\t';
            const Shape& s = t.shape();
            for (std::size_t i = 0; i < s.size(); ++i) {
                if (i) out << ',';
                out << s[i];
            }
            out << '\n';
        }
        out << '\n';
        for (const auto& [name, t] : entries) {
            (void)name;
            for (std::size_t i = 0; i < t.numel(); ++i) detail::put_f64_le(out, t.at(i));
        }
        if (!out) throw CheckpointError("checkpoint: write failed for " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw CheckpointError("checkpoint: cannot move " + tmp + " into place");
    }
}

// Loads every entry as a fresh non-trainable tensor, in manifest order.
inline NamedTensors load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("checkpoint: cannot open " + path);
    char magic[8];
    if (!in.read(magic, 8) || !std::equal(magic, magic + 8, checkpoint_magic)) {
        throw CheckpointError("checkpoint: " + path + " is not a checkpoint file");
    }
    std::vector<std::pair<std::string, Shape>> manifest;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) break;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw CheckpointError("checkpoint: malformed manifest line '" + line + "'");
        }
        const std::string name = line.substr(0, tab);
        Shape shape;
        std::size_t start = tab + 1;
        try {
            while (start <= line.size()) {
                const std::size_t comma = line.find(',', start);
                const std::string dim =
                    line.substr(start, comma == std::string::npos ? comma : comma - start);
                std::size_t used = 0;
                shape.push_back(static_cast<std::size_t>(std::stoull(dim, &used)));
                if (used != dim.size()) throw ParseError("trailing characters");
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
        } catch (const std::exception&) {
            throw CheckpointError("checkpoint: malformed shape in manifest line '" + line + "'");
        }
        if (shape.empty()) {
            throw CheckpointError("checkpoint: empty shape for entry '" + name + "'");
        }
        manifest.emplace_back(name, std::move(shape));
    }
    NamedTensors out;
    for (auto& [name, shape] : manifest) {
        Tensor t = Tensor::zeros(shape);
        for (std::size_t i = 0; i < t.numel(); ++i) t.at(i) = detail::get_f64_le(in);
        out.emplace_back(name, std::move(t));
    }
    if (in.peek() != std::ifstream::traits_type::eof()) {
        throw CheckpointError("checkpoint: trailing bytes after value payload in " + path);
    }
    return out;
}

// Copies loaded values into the matching live parameters. Every target name
// must exist with an identical shape; all offending names are reported in
// one error.
inline void assign_params(const NamedTensors& loaded, const NamedTensors& targets) {
    std::string missing, mismatched;
    for (const auto& [name, target] : targets) {
        const Tensor* src = nullptr;
        for (const auto& [lname, lt] : loaded) {
            if (lname == name) {
                src = &lt;
                break;
            }
        }
        if (!src) {
            missing += missing.empty() ? name : ", " + name;
            continue;
        }
        if (src->shape() != target.shape()) {
            mismatched += mismatched.empty() ? name : ", " + name;
            continue;
        }
    }
    if (!missing.empty() || !mismatched.empty()) {
        std::string msg = "checkpoint: cannot load parameters";
        if (!missing.empty()) msg += "; missing: " + missing;
        if (!mismatched.empty()) msg += "; shape mismatch: " + mismatched;
        throw CheckpointError(msg);
    }
    for (const auto& [name, target] : targets) {
        for (const auto& [lname, lt] : loaded) {
            if (lname == name) {
                Tensor dst = target;
                for (std::size_t i = 0; i < dst.numel(); ++i) dst.at(i) = lt.at(i);
                break;
            }
        }
    }
}

inline const Tensor* find_entry(const NamedTensors& entries, const std::string& name) {
    for (const auto& [n, t] : entries) {
        if (n == name) return &t;
    }
    return nullptr;
}

}  // namespace mtdnn
