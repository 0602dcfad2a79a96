#pragma once

#include <cmath>
#include <complex>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "chorus/audio_io.hpp"
#include "chorus/error.hpp"
#include "chorus/fft.hpp"
#include "chorus/noise.hpp"
#include "chorus/rng.hpp"

namespace chorus {

namespace augment_detail {

inline double princarg(double phase) {
    const double two_pi = 2.0 * 3.14159265358979323846;
    return phase - two_pi * std::round(phase / two_pi);
}

inline void clamp_unit(std::vector<float>& v) {
    for (auto& s : v) {
        if (s > 1.0f) s = 1.0f;
        if (s < -1.0f) s = -1.0f;
    }
}

} // namespace augment_detail

// Phase-vocoder time stretch: duration scales by 1/rate, pitch unchanged.
// Analysis/synthesis with n_fft 1024, synthesis hop 256, Hann on both sides.
inline AudioClip time_stretch(const AudioClip& clip, double rate) {
    CHORUS_REQUIRE(rate >= 0.5 && rate <= 2.0, Err::RateOutOfRange,
                   "stretch rate outside [0.5, 2]");
    clip.validate();
    if (rate == 1.0 || clip.samples.empty()) return clip;

    constexpr int kFftSize = 1024;
    constexpr int kHop = 256;
    const std::size_t n_fft = kFftSize;

    std::vector<double> x(clip.samples.begin(), clip.samples.end());
    if (x.size() < n_fft + kHop) x.resize(n_fft + kHop, 0.0);
    const std::size_t n_in = x.size();

    const std::size_t n_out =
        static_cast<std::size_t>(std::llround(static_cast<double>(clip.samples.size()) / rate));
    const std::size_t buf_len = std::max(n_out, n_fft) + n_fft;
    const std::size_t n_frames = (std::max(n_out, n_fft) - n_fft) / kHop + 2;

    static const double pi = 3.14159265358979323846;
    std::vector<double> window(n_fft);
    for (std::size_t i = 0; i < n_fft; ++i)
        window[i] = 0.5 - 0.5 * std::cos(2.0 * pi * static_cast<double>(i) / n_fft);

    Fft fft(n_fft);
    const std::size_t n_half = n_fft / 2;

    std::vector<std::complex<double>> frame(n_fft);
    std::vector<double> prev_phase(n_half + 1, 0.0);
    std::vector<double> out_phase(n_half + 1, 0.0);
    std::vector<double> acc(buf_len, 0.0);
    std::vector<double> wacc(buf_len, 0.0);

    std::int64_t prev_pos = 0;
    for (std::size_t m = 0; m < n_frames; ++m) {
        const double analysis_t = static_cast<double>(m) * kHop * rate;
        std::int64_t pos = static_cast<std::int64_t>(std::llround(analysis_t));
        if (pos > static_cast<std::int64_t>(n_in - n_fft))
            pos = static_cast<std::int64_t>(n_in - n_fft);

        for (std::size_t i = 0; i < n_fft; ++i)
            frame[i] = {x[static_cast<std::size_t>(pos) + i] * window[i], 0.0};
        fft.forward(frame);

        if (m == 0) {
            for (std::size_t k = 0; k <= n_half; ++k) {
                prev_phase[k] = std::arg(frame[k]);
                out_phase[k] = prev_phase[k];
            }
        } else {
            const double delta = static_cast<double>(std::max<std::int64_t>(pos - prev_pos, 1));
            for (std::size_t k = 0; k <= n_half; ++k) {
                const double omega = 2.0 * pi * static_cast<double>(k) / static_cast<double>(n_fft);
                const double phase = std::arg(frame[k]);
                const double dev = augment_detail::princarg(phase - prev_phase[k] - omega * delta);
                const double inst_freq = omega + dev / delta;
                out_phase[k] += inst_freq * kHop;
                prev_phase[k] = phase;
            }
        }

        std::vector<std::complex<double>> synth(n_fft);
        for (std::size_t k = 0; k <= n_half; ++k)
            synth[k] = std::polar(std::abs(frame[k]), out_phase[k]);
        for (std::size_t k = n_half + 1; k < n_fft; ++k) synth[k] = std::conj(synth[n_fft - k]);
        fft.inverse(synth);

        const std::size_t out_pos = m * kHop;
        for (std::size_t i = 0; i < n_fft && out_pos + i < buf_len; ++i) {
            acc[out_pos + i] += synth[i].real() * window[i];
            wacc[out_pos + i] += window[i] * window[i];
        }
        prev_pos = pos;
    }

    AudioClip out;
    out.sample_rate_hz = clip.sample_rate_hz;
    out.samples.resize(n_out);
    for (std::size_t i = 0; i < n_out; ++i)
        out.samples[i] = static_cast<float>(wacc[i] > 1e-8 ? acc[i] / wacc[i] : 0.0);
    augment_detail::clamp_unit(out.samples);
    return out;
}

// Pitch shift composed as stretch + resample: duration preserved, dominant
// frequency scaled by 2^(semitones/12). The sample-rate field is unchanged.
inline AudioClip pitch_shift(const AudioClip& clip, double semitones) {
    CHORUS_REQUIRE(semitones >= -12.0 && semitones <= 12.0, Err::OutOfRange,
                   "pitch shift outside [-12, 12] semitones");
    clip.validate();
    if (semitones == 0.0 || clip.samples.empty()) return clip;

    const double r = std::pow(2.0, semitones / 12.0);
    AudioClip stretched = time_stretch(clip, 1.0 / r);
    const int inner_rate =
        std::max(1, static_cast<int>(std::lround(clip.sample_rate_hz / r)));
    AudioClip shifted = resample(stretched, inner_rate);
    shifted.sample_rate_hz = clip.sample_rate_hz;
    augment_detail::clamp_unit(shifted.samples);
    return shifted;
}

// signal + g*noise with g chosen so the scaled-noise power sits snr_db below
// the signal power. Noise is tiled/cropped to the signal length first.
inline AudioClip mix_noise(const AudioClip& signal, const AudioClip& noise, double snr_db) {
    signal.validate();
    noise.validate();
    CHORUS_REQUIRE(signal.sample_rate_hz == noise.sample_rate_hz, Err::RateMismatch,
                   "signal and noise rates differ");
    CHORUS_REQUIRE(snr_db >= -10.0 && snr_db <= 60.0, Err::OutOfRange,
                   "snr outside [-10, 60] dB");
    CHORUS_REQUIRE(!noise.samples.empty(), Err::SilentNoise, "empty noise clip");

    const std::size_t n = signal.samples.size();
    std::vector<float> tiled(n);
    for (std::size_t i = 0; i < n; ++i) tiled[i] = noise.samples[i % noise.samples.size()];

    double p_sig = 0.0, p_noise = 0.0;
    for (float s : signal.samples) p_sig += static_cast<double>(s) * s;
    for (float s : tiled) p_noise += static_cast<double>(s) * s;
    if (n > 0) {
        p_sig /= static_cast<double>(n);
        p_noise /= static_cast<double>(n);
    }
    CHORUS_REQUIRE(p_sig > 0.0, Err::SilentSignal, "signal power is zero");
    CHORUS_REQUIRE(p_noise > 0.0, Err::SilentNoise, "noise power is zero");

    const double gain = std::sqrt(p_sig / (p_noise * std::pow(10.0, snr_db / 10.0)));
    AudioClip out;
    out.sample_rate_hz = signal.sample_rate_hz;
    out.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.samples[i] = static_cast<float>(signal.samples[i] + gain * tiled[i]);
    augment_detail::clamp_unit(out.samples);
    return out;
}

struct AugmentConfig {
    double stretch_lo = 0.8, stretch_hi = 1.25;
    double pitch_lo = -2.0, pitch_hi = 2.0;
    double snr_lo = 5.0, snr_hi = 30.0;
    double p_stretch = 0.5, p_pitch = 0.5, p_noise = 0.5;

    // Noise pool: WAV files loaded from noise_dir, or a synthetic pink pool.
    std::string noise_dir;
    int pink_pool_size = 8;
    std::shared_ptr<const std::vector<AudioClip>> noise_pool;

    void validate() const {
        CHORUS_REQUIRE(stretch_lo > 0.0 && stretch_lo <= stretch_hi, Err::InvalidParams,
                       "bad stretch range");
        CHORUS_REQUIRE(std::isfinite(pitch_lo) && pitch_lo <= pitch_hi, Err::InvalidParams,
                       "bad pitch range");
        CHORUS_REQUIRE(std::isfinite(snr_lo) && snr_lo <= snr_hi, Err::InvalidParams,
                       "bad snr range");
        for (double p : {p_stretch, p_pitch, p_noise})
            CHORUS_REQUIRE(p >= 0.0 && p <= 1.0, Err::InvalidParams,
                           "probability outside [0, 1]");
        CHORUS_REQUIRE(pink_pool_size >= 1, Err::InvalidParams, "empty pink pool");
    }
};

inline void to_json(nlohmann::json& j, const AugmentConfig& c) {
    j = {{"stretch_range", {c.stretch_lo, c.stretch_hi}},
         {"pitch_range_semitones", {c.pitch_lo, c.pitch_hi}},
         {"snr_range_db", {c.snr_lo, c.snr_hi}},
         {"apply_probabilities",
          {{"stretch", c.p_stretch}, {"pitch", c.p_pitch}, {"noise", c.p_noise}}},
         {"noise_dir", c.noise_dir},
         {"pink_pool_size", c.pink_pool_size}};
}

inline void from_json(const nlohmann::json& j, AugmentConfig& c) {
    if (j.contains("stretch_range")) {
        c.stretch_lo = j["stretch_range"][0].get<double>();
        c.stretch_hi = j["stretch_range"][1].get<double>();
    }
    if (j.contains("pitch_range_semitones")) {
        c.pitch_lo = j["pitch_range_semitones"][0].get<double>();
        c.pitch_hi = j["pitch_range_semitones"][1].get<double>();
    }
    if (j.contains("snr_range_db")) {
        c.snr_lo = j["snr_range_db"][0].get<double>();
        c.snr_hi = j["snr_range_db"][1].get<double>();
    }
    if (j.contains("apply_probabilities")) {
        const auto& p = j["apply_probabilities"];
        if (p.contains("stretch")) c.p_stretch = p["stretch"].get<double>();
        if (p.contains("pitch")) c.p_pitch = p["pitch"].get<double>();
        if (p.contains("noise")) c.p_noise = p["noise"].get<double>();
    }
    if (j.contains("noise_dir")) c.noise_dir = j["noise_dir"].get<std::string>();
    if (j.contains("pink_pool_size")) c.pink_pool_size = j["pink_pool_size"].get<int>();
}

// Draws one noise clip for the policy: from the loaded pool when present,
// otherwise a seeded pink-noise clip matching the signal.
inline AudioClip pick_noise(const AugmentConfig& cfg, const AudioClip& like, Rng& rng) {
    if (cfg.noise_pool && !cfg.noise_pool->empty()) {
        const auto idx = rng.uniform_index(cfg.noise_pool->size());
        AudioClip n = (*cfg.noise_pool)[idx];
        if (n.sample_rate_hz != like.sample_rate_hz) n = resample(n, like.sample_rate_hz);
        return n;
    }
    const auto idx = rng.uniform_index(static_cast<std::uint64_t>(cfg.pink_pool_size));
    Rng noise_rng = Rng::derive(0x6b696e70, {idx});
    AudioClip n;
    n.sample_rate_hz = like.sample_rate_hz;
    n.samples = pink_noise(std::max<std::size_t>(like.samples.size(), 1), noise_rng);
    // pink_noise is unit RMS; mix_noise rescales it anyway
    return n;
}

// Stochastic composition, fixed order stretch -> pitch -> noise.
// Deterministic in (clip, config, seed).
inline AudioClip augment_policy(const AudioClip& clip, const AugmentConfig& cfg,
                                std::uint64_t seed) {
    cfg.validate();
    clip.validate();
    Rng rng = Rng::derive(seed, {0x617567});

    AudioClip out = clip;
    if (rng.bernoulli(cfg.p_stretch)) {
        const double rate = rng.uniform(cfg.stretch_lo, cfg.stretch_hi);
        out = time_stretch(out, rate);
    }
    if (rng.bernoulli(cfg.p_pitch)) {
        const double semis = rng.uniform(cfg.pitch_lo, cfg.pitch_hi);
        out = pitch_shift(out, semis);
    }
    if (rng.bernoulli(cfg.p_noise)) {
        const AudioClip noise = pick_noise(cfg, out, rng);
        const double snr = rng.uniform(cfg.snr_lo, cfg.snr_hi);
        out = mix_noise(out, noise, snr);
    }
    return out;
}

} // namespace chorus
