#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "chorus/error.hpp"

namespace chorus {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 transform with precomputed roots. Construct once per
// size and reuse; transforms are hot inside featurization and the phase
// vocoder.
class Fft {
public:
    explicit Fft(std::size_t n) : n_(n) {
        CHORUS_REQUIRE(is_pow2(n), Err::InvalidParams, "fft size must be a power of two");
        rev_.resize(n);
        std::size_t log2n = 0;
        while ((std::size_t{1} << log2n) < n) ++log2n;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = 0;
            for (std::size_t b = 0; b < log2n; ++b)
                if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (log2n - 1 - b);
            rev_[i] = r;
        }
        roots_.resize(n / 2);
        const double two_pi = 2.0 * 3.14159265358979323846;
        for (std::size_t k = 0; k < n / 2; ++k)
            roots_[k] = std::polar(1.0, -two_pi * static_cast<double>(k) / static_cast<double>(n));
    }

    std::size_t size() const { return n_; }

    void forward(std::vector<std::complex<double>>& a) const { transform(a, false); }

    void inverse(std::vector<std::complex<double>>& a) const {
        transform(a, true);
        const double inv = 1.0 / static_cast<double>(n_);
        for (auto& v : a) v *= inv;
    }

private:
    void transform(std::vector<std::complex<double>>& a, bool inv) const {
        CHORUS_REQUIRE(a.size() == n_, Err::ShapeMismatch, "fft buffer size mismatch");
        for (std::size_t i = 0; i < n_; ++i)
            if (i < rev_[i]) std::swap(a[i], a[rev_[i]]);
        for (std::size_t len = 2; len <= n_; len <<= 1) {
            const std::size_t stride = n_ / len;
            for (std::size_t i = 0; i < n_; i += len) {
                for (std::size_t j = 0; j < len / 2; ++j) {
                    std::complex<double> w = roots_[j * stride];
                    if (inv) w = std::conj(w);
                    const auto u = a[i + j];
                    const auto v = a[i + j + len / 2] * w;
                    a[i + j] = u + v;
                    a[i + j + len / 2] = u - v;
                }
            }
        }
    }

    std::size_t n_;
    std::vector<std::size_t> rev_;
    std::vector<std::complex<double>> roots_;
};

// O(n^2) complex DFT; covers non-power-of-two frame sizes.
inline std::vector<std::complex<double>> dft_direct(const std::vector<std::complex<double>>& x,
                                                    bool inverse = false) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    const double two_pi = 2.0 * 3.14159265358979323846;
    const double sign = inverse ? 1.0 : -1.0;
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t t = 0; t < n; ++t) {
            const double ang = sign * two_pi * static_cast<double>(k) * static_cast<double>(t) /
                               static_cast<double>(n);
            acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = inverse ? acc / static_cast<double>(n) : acc;
    }
    return out;
}

} // namespace chorus
