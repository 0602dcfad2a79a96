#pragma once

// Test-only reference computations, kept independent of the library paths
// they are used to check.

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "chorus/audio_io.hpp"
#include "chorus/fft.hpp"

namespace oracles {

inline constexpr double kPi = 3.14159265358979323846;

// O(n^2) DFT magnitudes of Hann-windowed frames; mirrors the stft contract
// without sharing any code with it.
inline std::vector<std::vector<double>> naive_stft_magnitude(const std::vector<float>& samples,
                                                             int n_fft, int hop) {
    const std::size_t n = samples.size();
    const std::size_t n_frames = (n - static_cast<std::size_t>(n_fft)) / hop + 1;
    const std::size_t n_bins = static_cast<std::size_t>(n_fft) / 2 + 1;

    std::vector<double> window(static_cast<std::size_t>(n_fft));
    for (int i = 0; i < n_fft; ++i)
        window[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / n_fft);

    std::vector<std::vector<double>> out(n_bins, std::vector<double>(n_frames, 0.0));
    for (std::size_t t = 0; t < n_frames; ++t) {
        for (std::size_t k = 0; k < n_bins; ++k) {
            double re = 0.0, im = 0.0;
            for (int i = 0; i < n_fft; ++i) {
                const double x =
                    samples[t * static_cast<std::size_t>(hop) + static_cast<std::size_t>(i)] *
                    window[static_cast<std::size_t>(i)];
                const double ang = -2.0 * kPi * static_cast<double>(k) * i / n_fft;
                re += x * std::cos(ang);
                im += x * std::sin(ang);
            }
            out[k][t] = std::hypot(re, im);
        }
    }
    return out;
}

// Dominant frequency via a zero-padded transform plus parabolic refinement.
inline double dominant_frequency_hz(const std::vector<float>& samples, int rate) {
    std::size_t n = 1;
    while (n < samples.size() * 4) n <<= 1;
    std::vector<std::complex<double>> buf(n, {0.0, 0.0});
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double w =
            0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) /
                                 static_cast<double>(samples.size() > 1 ? samples.size() - 1 : 1));
        buf[i] = {samples[i] * w, 0.0};
    }
    chorus::Fft fft(n);
    fft.forward(buf);

    std::size_t best = 1;
    double best_mag = 0.0;
    for (std::size_t k = 1; k < n / 2; ++k) {
        const double m = std::abs(buf[k]);
        if (m > best_mag) {
            best_mag = m;
            best = k;
        }
    }
    double delta = 0.0;
    if (best > 0 && best + 1 < n / 2) {
        const double l = std::abs(buf[best - 1]);
        const double c = std::abs(buf[best]);
        const double r = std::abs(buf[best + 1]);
        const double denom = l - 2.0 * c + r;
        if (denom != 0.0) delta = 0.5 * (l - r) / denom;
    }
    return (static_cast<double>(best) + delta) * rate / static_cast<double>(n);
}

inline double mean_power(const std::vector<float>& v) {
    double acc = 0.0;
    for (float s : v) acc += static_cast<double>(s) * s;
    return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

inline double snr_db(const std::vector<float>& signal, const std::vector<float>& noise) {
    return 10.0 * std::log10(mean_power(signal) / mean_power(noise));
}

inline chorus::AudioClip sine_clip(double freq_hz, double duration_s, int rate,
                                   double amplitude = 0.5) {
    chorus::AudioClip clip;
    clip.sample_rate_hz = rate;
    const auto n = static_cast<std::size_t>(duration_s * rate);
    clip.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        clip.samples[i] =
            static_cast<float>(amplitude * std::sin(2.0 * kPi * freq_hz * i / rate));
    return clip;
}

} // namespace oracles
