#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "chorus/error.hpp"
#include "chorus/rng.hpp"

namespace chorus {

// Shape-tagged row-major array. float carries training; double carries
// gradient verification.
template <typename T>
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
        data.assign(numel_of(shape), T{0});
    }

    static std::size_t numel_of(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t d : s) n *= d;
        return s.empty() ? 0 : n;
    }

    std::size_t numel() const { return data.size(); }
    bool empty() const { return data.empty(); }

    std::size_t dim(std::size_t i) const { return shape.at(i); }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    bool all_finite() const {
        for (T v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

template <typename T>
bool same_shape(const Tensor<T>& a, const Tensor<T>& b) {
    return a.shape == b.shape;
}

// Kaiming-normal init: normal(0, sqrt(2/fan_in)), fan_in = product of all
// dims past the first (output) dim. Deterministic per seed.
template <typename T>
Tensor<T> he_init(const std::vector<std::size_t>& shape, std::uint64_t seed) {
    CHORUS_REQUIRE(!shape.empty(), Err::ShapeMismatch, "he_init needs a shape");
    std::size_t fan_in = 1;
    if (shape.size() >= 2) {
        for (std::size_t i = 1; i < shape.size(); ++i) fan_in *= shape[i];
    } else {
        fan_in = shape[0];
    }
    CHORUS_REQUIRE(fan_in > 0, Err::ShapeMismatch, "he_init fan_in is zero");
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    Rng rng = Rng::derive(seed, {0x6865696e});
    Tensor<T> t(shape);
    for (auto& v : t.data) v = static_cast<T>(rng.normal() * stddev);
    return t;
}

} // namespace chorus
