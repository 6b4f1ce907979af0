#pragma once

#include <Eigen/Core>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <string>

#include "hoop/core/error.hpp"

namespace hoop::meshnet {

/// Named parameter tensors (matrices), iterated in name order.
struct NetParams {
    std::map<std::string, Eigen::MatrixXd> tensors;

    Eigen::MatrixXd& operator[](const std::string& name) {
        auto it = tensors.find(name);
        if (it == tensors.end()) throw ValidationError("missing parameter tensor '" + name + "'");
        return it->second;
    }
    const Eigen::MatrixXd& operator[](const std::string& name) const {
        auto it = tensors.find(name);
        if (it == tensors.end()) throw ValidationError("missing parameter tensor '" + name + "'");
        return it->second;
    }
    bool contains(const std::string& name) const { return tensors.count(name) > 0; }

    Eigen::Index count() const {
        Eigen::Index n = 0;
        for (const auto& [k, v] : tensors) n += v.size();
        return n;
    }

    NetParams zeros_like() const {
        NetParams z;
        for (const auto& [k, v] : tensors) z.tensors[k] = Eigen::MatrixXd::Zero(v.rows(), v.cols());
        return z;
    }

    void set_zero() {
        for (auto& [k, v] : tensors) v.setZero();
    }

    /// this += a * other (shapes must match)
    void add_scaled(const NetParams& other, double a) {
        for (auto& [k, v] : tensors) {
            const auto& o = other[k];
            require(o.rows() == v.rows() && o.cols() == v.cols(), "parameter shape mismatch for '" + k + "'");
            v += a * o;
        }
    }

    bool all_finite() const {
        for (const auto& [k, v] : tensors)
            if (!v.allFinite()) return false;
        return true;
    }

    bool same_shapes(const NetParams& o) const {
        if (tensors.size() != o.tensors.size()) return false;
        for (const auto& [k, v] : tensors) {
            auto it = o.tensors.find(k);
            if (it == o.tensors.end() || it->second.rows() != v.rows() || it->second.cols() != v.cols()) return false;
        }
        return true;
    }
};

/// Glorot-uniform weights for a layer; biases start at zero.
inline void add_layer(NetParams& p, const std::string& name, Eigen::Index in, Eigen::Index out, std::mt19937_64& rng) {
    const double lim = std::sqrt(6.0 / double(in + out));
    std::uniform_real_distribution<double> u(-lim, lim);
    Eigen::MatrixXd w(in, out);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
    p.tensors[name + ".W"] = std::move(w);
    p.tensors[name + ".b"] = Eigen::MatrixXd::Zero(1, out);
}

namespace detail {
inline constexpr char kParamsMagic[8] = {'H', 'O', 'O', 'P', 'N', 'E', 'T', '1'};

template <class T>
void put(std::ostream& o, T v) {
    static_assert(std::endian::native == std::endian::little, "parameter files are little-endian");
    o.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& in, const std::string& path) {
    T v;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw IoError(path + ": truncated parameter file");
    return v;
}
}  // namespace detail

/// Layout: magic, u32 tensor count, then per tensor u32 name length, name bytes, u32 rows,
/// u32 cols, rows*cols f64 values in row-major order.
inline void write_params(const std::string& path, const NetParams& p) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write(detail::kParamsMagic, 8);
    detail::put<uint32_t>(out, static_cast<uint32_t>(p.tensors.size()));
    for (const auto& [name, m] : p.tensors) {
        detail::put<uint32_t>(out, static_cast<uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        detail::put<uint32_t>(out, static_cast<uint32_t>(m.rows()));
        detail::put<uint32_t>(out, static_cast<uint32_t>(m.cols()));
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) detail::put<double>(out, m(r, c));
    }
    if (!out) throw IoError("failed writing " + path);
}

inline NetParams read_params(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, detail::kParamsMagic, 8) != 0)
        throw IoError(path + ": not a parameter file");
    NetParams p;
    const auto n = detail::get<uint32_t>(in, path);
    for (uint32_t t = 0; t < n; ++t) {
        const auto len = detail::get<uint32_t>(in, path);
        if (len > 4096) throw IoError(path + ": implausible tensor name length");
        std::string name(len, '\0');
        if (!in.read(name.data(), len)) throw IoError(path + ": truncated parameter file");
        const auto rows = detail::get<uint32_t>(in, path), cols = detail::get<uint32_t>(in, path);
        if (uint64_t(rows) * cols > (uint64_t(1) << 32)) throw IoError(path + ": implausible tensor size");
        Eigen::MatrixXd m(rows, cols);
        for (uint32_t r = 0; r < rows; ++r)
            for (uint32_t c = 0; c < cols; ++c) m(r, c) = detail::get<double>(in, path);
        if (!p.tensors.emplace(name, std::move(m)).second) throw IoError(path + ": duplicate tensor '" + name + "'");
    }
    if (in.peek() != std::char_traits<char>::eof()) throw IoError(path + ": trailing bytes after parameters");
    return p;
}

}  // namespace hoop::meshnet
