#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "chorus/audio_io.hpp"
#include "chorus/error.hpp"
#include "chorus/fft.hpp"

namespace chorus {

struct MelParams {
    int sample_rate_hz = 16000;
    int n_fft = 512;
    int hop = 256;
    int n_mels = 64;
    double fmin_hz = 50.0;
    double fmax_hz = 8000.0;
    double log_floor = 1e-10;

    void validate() const {
        CHORUS_REQUIRE(sample_rate_hz > 0, Err::InvalidParams, "sample_rate_hz must be positive");
        CHORUS_REQUIRE(n_fft > 0, Err::InvalidParams, "n_fft must be positive");
        CHORUS_REQUIRE(hop > 0 && hop <= n_fft, Err::InvalidParams, "need 0 < hop <= n_fft");
        CHORUS_REQUIRE(n_mels >= 1, Err::InvalidParams, "n_mels must be >= 1");
        CHORUS_REQUIRE(fmin_hz >= 0.0 && fmin_hz < fmax_hz, Err::InvalidParams,
                       "need 0 <= fmin < fmax");
        CHORUS_REQUIRE(fmax_hz <= sample_rate_hz / 2.0, Err::InvalidParams,
                       "fmax above Nyquist");
        CHORUS_REQUIRE(log_floor > 0.0, Err::InvalidParams, "log_floor must be positive");
    }
};

inline void to_json(nlohmann::json& j, const MelParams& p) {
    j = {{"sample_rate_hz", p.sample_rate_hz}, {"n_fft", p.n_fft},   {"hop", p.hop},
         {"n_mels", p.n_mels},                 {"fmin_hz", p.fmin_hz}, {"fmax_hz", p.fmax_hz},
         {"log_floor", p.log_floor}};
}

inline void from_json(const nlohmann::json& j, MelParams& p) {
    j.at("sample_rate_hz").get_to(p.sample_rate_hz);
    j.at("n_fft").get_to(p.n_fft);
    j.at("hop").get_to(p.hop);
    j.at("n_mels").get_to(p.n_mels);
    j.at("fmin_hz").get_to(p.fmin_hz);
    j.at("fmax_hz").get_to(p.fmax_hz);
    j.at("log_floor").get_to(p.log_floor);
}

// Log-mel energies, natural log, row-major n_mels x n_frames.
struct MelSpectrogram {
    std::size_t n_mels = 0;
    std::size_t n_frames = 0;
    std::vector<float> data;
    MelParams params;

    float at(std::size_t mel, std::size_t frame) const { return data[mel * n_frames + frame]; }
    float& at(std::size_t mel, std::size_t frame) { return data[mel * n_frames + frame]; }
};

inline std::size_t stft_frame_count(std::size_t n_samples, int n_fft, int hop) {
    CHORUS_REQUIRE(n_samples >= static_cast<std::size_t>(n_fft), Err::TooShort,
                   "clip shorter than one analysis frame");
    return (n_samples - static_cast<std::size_t>(n_fft)) / static_cast<std::size_t>(hop) + 1;
}

inline std::vector<double> hann_window(int n) {
    std::vector<double> w(static_cast<std::size_t>(n));
    const double two_pi = 2.0 * 3.14159265358979323846;
    for (int i = 0; i < n; ++i)
        w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(two_pi * i / n);
    return w;
}

// Magnitudes of the one-sided DFT of Hann-windowed frames, no centering or
// padding. Row-major (n_fft/2+1) x n_frames.
struct StftMagnitude {
    std::size_t n_bins = 0;
    std::size_t n_frames = 0;
    std::vector<double> data;

    double at(std::size_t bin, std::size_t frame) const { return data[bin * n_frames + frame]; }
};

inline StftMagnitude stft_magnitude(const AudioClip& clip, int n_fft, int hop) {
    CHORUS_REQUIRE(n_fft > 0 && hop > 0 && hop <= n_fft, Err::InvalidParams, "bad stft params");
    const std::size_t n_frames = stft_frame_count(clip.samples.size(), n_fft, hop);
    const std::size_t n_bins = static_cast<std::size_t>(n_fft) / 2 + 1;

    StftMagnitude out;
    out.n_bins = n_bins;
    out.n_frames = n_frames;
    out.data.assign(n_bins * n_frames, 0.0);

    const auto window = hann_window(n_fft);
    const bool pow2 = is_pow2(static_cast<std::size_t>(n_fft));
    Fft fft(pow2 ? static_cast<std::size_t>(n_fft) : 2);

    std::vector<std::complex<double>> frame(static_cast<std::size_t>(n_fft));
    for (std::size_t t = 0; t < n_frames; ++t) {
        const std::size_t start = t * static_cast<std::size_t>(hop);
        for (int i = 0; i < n_fft; ++i)
            frame[static_cast<std::size_t>(i)] = {
                static_cast<double>(clip.samples[start + static_cast<std::size_t>(i)]) *
                    window[static_cast<std::size_t>(i)],
                0.0};
        if (pow2) {
            fft.forward(frame);
        } else {
            frame = dft_direct(frame);
        }
        for (std::size_t b = 0; b < n_bins; ++b) out.data[b * n_frames + t] = std::abs(frame[b]);
    }
    return out;
}

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular filters, peaks equally spaced on the HTK mel scale between
// fmin and fmax, each triangle peak-normalized to 1.
// Row-major n_mels x (n_fft/2+1).
inline std::vector<double> build_mel_filterbank(const MelParams& p) {
    p.validate();
    const std::size_t n_bins = static_cast<std::size_t>(p.n_fft) / 2 + 1;
    const std::size_t n_mels = static_cast<std::size_t>(p.n_mels);

    const double mel_lo = hz_to_mel(p.fmin_hz);
    const double mel_hi = hz_to_mel(p.fmax_hz);
    std::vector<double> edges_hz(n_mels + 2);
    for (std::size_t i = 0; i < n_mels + 2; ++i)
        edges_hz[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                             static_cast<double>(n_mels + 1));

    std::vector<double> fb(n_mels * n_bins, 0.0);
    for (std::size_t j = 0; j < n_mels; ++j) {
        const double f_left = edges_hz[j];
        const double f_center = edges_hz[j + 1];
        const double f_right = edges_hz[j + 2];
        for (std::size_t b = 0; b < n_bins; ++b) {
            const double f = static_cast<double>(b) * p.sample_rate_hz / p.n_fft;
            double w = 0.0;
            if (f > f_left && f < f_right) {
                w = f <= f_center ? (f - f_left) / (f_center - f_left)
                                  : (f_right - f) / (f_right - f_center);
            }
            fb[j * n_bins + b] = w;
        }
    }
    return fb;
}

// Frequency of the peak of mel filter j; handy for synthesizing probes.
inline double mel_bin_center_hz(const MelParams& p, std::size_t j) {
    const double mel_lo = hz_to_mel(p.fmin_hz);
    const double mel_hi = hz_to_mel(p.fmax_hz);
    return mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(j + 1) /
                                  static_cast<double>(p.n_mels + 1));
}

inline MelSpectrogram log_mel_spectrogram(const AudioClip& clip, const MelParams& p) {
    p.validate();
    CHORUS_REQUIRE(clip.sample_rate_hz == p.sample_rate_hz, Err::RateMismatch,
                   "clip rate differs from mel params rate");
    const auto stft = stft_magnitude(clip, p.n_fft, p.hop);
    const auto fb = build_mel_filterbank(p);

    MelSpectrogram spec;
    spec.n_mels = static_cast<std::size_t>(p.n_mels);
    spec.n_frames = stft.n_frames;
    spec.params = p;
    spec.data.resize(spec.n_mels * spec.n_frames);

    std::vector<double> power(stft.data.size());
    for (std::size_t i = 0; i < stft.data.size(); ++i) power[i] = stft.data[i] * stft.data[i];

    for (std::size_t j = 0; j < spec.n_mels; ++j) {
        for (std::size_t t = 0; t < spec.n_frames; ++t) {
            double acc = 0.0;
            for (std::size_t b = 0; b < stft.n_bins; ++b)
                acc += fb[j * stft.n_bins + b] * power[b * stft.n_frames + t];
            spec.data[j * spec.n_frames + t] = static_cast<float>(std::log(acc + p.log_floor));
        }
    }
    return spec;
}

// (x - mean) / (std + 1e-8) over the whole matrix, population std.
inline MelSpectrogram zscore_normalize(const MelSpectrogram& spec) {
    CHORUS_REQUIRE(!spec.data.empty(), Err::Empty, "cannot normalize empty spectrogram");
    double sum = 0.0;
    for (float v : spec.data) sum += v;
    const double mean = sum / static_cast<double>(spec.data.size());
    double var = 0.0;
    for (float v : spec.data) {
        const double d = v - mean;
        var += d * d;
    }
    var /= static_cast<double>(spec.data.size());
    const double denom = std::sqrt(var) + 1e-8;

    MelSpectrogram out = spec;
    for (auto& v : out.data) v = static_cast<float>((v - mean) / denom);
    return out;
}

// ---- spectrogram cache ------------------------------------------------
// "MELS", version u16, u32 JSON length, MelParams JSON, then row-major
// little-endian f32 data. Frame count is implied by the payload size.

inline constexpr std::uint16_t kMelCacheVersion = 1;

inline void write_mel_cache(const MelSpectrogram& spec, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    CHORUS_REQUIRE(f.good(), Err::IoFailure, "cannot open for write: " + path);
    f.write("MELS", 4);
    const std::uint16_t ver = kMelCacheVersion;
    f.write(reinterpret_cast<const char*>(&ver), 2);
    const std::string js = nlohmann::json(spec.params).dump();
    const std::uint32_t len = static_cast<std::uint32_t>(js.size());
    f.write(reinterpret_cast<const char*>(&len), 4);
    f.write(js.data(), static_cast<std::streamsize>(js.size()));
    f.write(reinterpret_cast<const char*>(spec.data.data()),
            static_cast<std::streamsize>(spec.data.size() * sizeof(float)));
    CHORUS_REQUIRE(f.good(), Err::IoFailure, "write failed: " + path);
}

inline MelSpectrogram read_mel_cache(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    CHORUS_REQUIRE(f.good(), Err::NotFound, "cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    CHORUS_REQUIRE(f.good() && std::memcmp(magic, "MELS", 4) == 0, Err::BadMagic,
                   "not a mel cache file");
    std::uint16_t ver = 0;
    f.read(reinterpret_cast<char*>(&ver), 2);
    CHORUS_REQUIRE(f.good() && ver == kMelCacheVersion, Err::VersionMismatch,
                   "unsupported mel cache version");
    std::uint32_t len = 0;
    f.read(reinterpret_cast<char*>(&len), 4);
    CHORUS_REQUIRE(f.good(), Err::MalformedHeader, "truncated mel cache header");
    std::string js(len, '\0');
    f.read(js.data(), len);
    CHORUS_REQUIRE(f.good(), Err::MalformedHeader, "truncated mel cache params");

    MelSpectrogram spec;
    spec.params = nlohmann::json::parse(js).get<MelParams>();
    spec.n_mels = static_cast<std::size_t>(spec.params.n_mels);

    std::vector<char> payload((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    CHORUS_REQUIRE(payload.size() % (sizeof(float) * spec.n_mels) == 0, Err::MalformedHeader,
                   "mel cache payload not rectangular");
    spec.n_frames = payload.size() / (sizeof(float) * spec.n_mels);
    spec.data.resize(spec.n_mels * spec.n_frames);
    std::memcpy(spec.data.data(), payload.data(), payload.size());
    return spec;
}

} // namespace chorus
