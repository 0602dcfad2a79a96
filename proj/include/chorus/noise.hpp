#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "chorus/rng.hpp"

namespace chorus {

// Pink (1/f) noise via Paul Kellet's 3-pole filter, normalized to unit RMS.
inline std::vector<float> pink_noise(std::size_t n, Rng& rng) {
    std::vector<float> out(n);
    double b0 = 0.0, b1 = 0.0, b2 = 0.0;
    double sumsq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = rng.normal();
        b0 = 0.99765 * b0 + w * 0.0990460;
        b1 = 0.96300 * b1 + w * 0.2965164;
        b2 = 0.57000 * b2 + w * 1.0526913;
        const double v = b0 + b1 + b2 + w * 0.1848;
        out[i] = static_cast<float>(v);
        sumsq += v * v;
    }
    if (n > 0 && sumsq > 0.0) {
        const double inv_rms = 1.0 / std::sqrt(sumsq / static_cast<double>(n));
        for (auto& v : out) v = static_cast<float>(v * inv_rms);
    }
    return out;
}

} // namespace chorus
