#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "chorus/augment.hpp"
#include "chorus/rng.hpp"
#include "oracles.hpp"

using chorus::AudioClip;
using chorus::AugmentConfig;

TEST_CASE("time_stretch at rate 1 keeps the length") {
    const auto clip = oracles::sine_clip(600.0, 1.0, 16000);
    const auto out = chorus::time_stretch(clip, 1.0);
    CHECK(out.samples.size() == clip.samples.size());
    CHECK(out.sample_rate_hz == 16000);
}

TEST_CASE("time_stretch rate 0.5 doubles the duration") {
    const auto clip = oracles::sine_clip(700.0, 2.0, 16000);
    const auto out = chorus::time_stretch(clip, 0.5);
    CHECK(std::fabs(out.duration_s() - 4.0) <= 1024.0 / 16000.0);
    CHECK(out.sample_rate_hz == 16000);
}

TEST_CASE("time_stretch preserves the dominant frequency") {
    const auto clip = oracles::sine_clip(1000.0, 2.0, 16000);
    for (double rate : {1.25, 0.8}) {
        const auto out = chorus::time_stretch(clip, rate);
        const double peak = oracles::dominant_frequency_hz(out.samples, 16000);
        REQUIRE(std::fabs(peak - 1000.0) <= 10.0); // 1 %
    }
}

TEST_CASE("time_stretch rejects rates outside [0.5, 2]") {
    const auto clip = oracles::sine_clip(500.0, 0.5, 16000);
    try {
        chorus::time_stretch(clip, 0.3);
        FAIL("expected RateOutOfRange");
    } catch (const chorus::Error& e) {
        CHECK(e.code() == chorus::Err::RateOutOfRange);
    }
}

TEST_CASE("pitch_shift by 0 semitones is benign") {
    const auto clip = oracles::sine_clip(440.0, 1.0, 16000);
    const auto out = chorus::pitch_shift(clip, 0.0);
    CHECK(out.samples.size() == clip.samples.size());
    const double peak = oracles::dominant_frequency_hz(out.samples, 16000);
    CHECK(std::fabs(peak - 440.0) <= 0.005 * 440.0);
}

TEST_CASE("pitch_shift one octave up and down") {
    {
        const auto clip = oracles::sine_clip(440.0, 1.5, 16000);
        const auto out = chorus::pitch_shift(clip, 12.0);
        CHECK(std::llabs(static_cast<long long>(out.samples.size()) -
                         static_cast<long long>(clip.samples.size())) <= 1024);
        CHECK(out.sample_rate_hz == 16000);
        const double peak = oracles::dominant_frequency_hz(out.samples, 16000);
        REQUIRE(std::fabs(peak - 880.0) <= 8.8);
    }
    {
        const auto clip = oracles::sine_clip(880.0, 1.5, 16000);
        const auto out = chorus::pitch_shift(clip, -12.0);
        const double peak = oracles::dominant_frequency_hz(out.samples, 16000);
        REQUIRE(std::fabs(peak - 440.0) <= 4.4);
    }
}

TEST_CASE("pitch_shift rejects more than an octave") {
    const auto clip = oracles::sine_clip(440.0, 0.5, 16000);
    try {
        chorus::pitch_shift(clip, 15.0);
        FAIL("expected OutOfRange");
    } catch (const chorus::Error& e) {
        CHECK(e.code() == chorus::Err::OutOfRange);
    }
}

TEST_CASE("mix_noise hits the requested SNR") {
    const auto signal = oracles::sine_clip(800.0, 1.0, 16000, 0.3);
    chorus::Rng rng(42);
    AudioClip noise;
    noise.sample_rate_hz = 16000;
    noise.samples = chorus::pink_noise(8000, rng); // shorter: forces tiling

    for (double snr : {0.0, 10.0, 25.0}) {
        const auto out = chorus::mix_noise(signal, noise, snr);
        REQUIRE(out.samples.size() == signal.samples.size());
        std::vector<float> added(out.samples.size());
        for (std::size_t i = 0; i < added.size(); ++i)
            added[i] = out.samples[i] - signal.samples[i];
        const double achieved = oracles::snr_db(signal.samples, added);
        REQUIRE(std::fabs(achieved - snr) <= 0.1);
    }
}

TEST_CASE("mix_noise rejects silent inputs") {
    AudioClip silent;
    silent.sample_rate_hz = 16000;
    silent.samples.assign(1000, 0.0f);
    const auto tone = oracles::sine_clip(500.0, 0.2, 16000);
    try {
        chorus::mix_noise(silent, tone, 10.0);
        FAIL("expected SilentSignal");
    } catch (const chorus::Error& e) {
        CHECK(e.code() == chorus::Err::SilentSignal);
    }
    try {
        chorus::mix_noise(tone, silent, 10.0);
        FAIL("expected SilentNoise");
    } catch (const chorus::Error& e) {
        CHECK(e.code() == chorus::Err::SilentNoise);
    }
}

TEST_CASE("augment_policy is deterministic in (clip, config, seed)") {
    const auto clip = oracles::sine_clip(1500.0, 1.0, 16000, 0.4);
    AugmentConfig cfg;
    const auto a = chorus::augment_policy(clip, cfg, 77);
    const auto b = chorus::augment_policy(clip, cfg, 77);
    REQUIRE(a.samples == b.samples);
    const auto c = chorus::augment_policy(clip, cfg, 78);
    CHECK(a.samples != c.samples);
}

TEST_CASE("augment_policy with zero probabilities is the identity") {
    const auto clip = oracles::sine_clip(900.0, 0.7, 16000);
    AugmentConfig cfg;
    cfg.p_stretch = cfg.p_pitch = cfg.p_noise = 0.0;
    const auto out = chorus::augment_policy(clip, cfg, 5);
    REQUIRE(out.samples == clip.samples);
}

TEST_CASE("noise-only policy with pinned SNR hits 10 dB") {
    const auto clip = oracles::sine_clip(1200.0, 1.0, 16000, 0.3);
    AugmentConfig cfg;
    cfg.p_stretch = cfg.p_pitch = 0.0;
    cfg.p_noise = 1.0;
    cfg.snr_lo = cfg.snr_hi = 10.0;
    const auto out = chorus::augment_policy(clip, cfg, 9);
    std::vector<float> added(out.samples.size());
    for (std::size_t i = 0; i < added.size(); ++i) added[i] = out.samples[i] - clip.samples[i];
    CHECK(std::fabs(oracles::snr_db(clip.samples, added) - 10.0) <= 0.1);
}

TEST_CASE("augmented outputs stay finite inside [-1, 1]") {
    const auto clip = oracles::sine_clip(2000.0, 1.0, 16000, 0.9);
    AugmentConfig cfg;
    cfg.p_stretch = cfg.p_pitch = cfg.p_noise = 1.0;
    cfg.snr_lo = -10.0;
    cfg.snr_hi = 0.0; // loud noise to stress the clamp
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const auto out = chorus::augment_policy(clip, cfg, seed);
        CHECK(out.sample_rate_hz == clip.sample_rate_hz);
        for (float s : out.samples) {
            REQUIRE(std::isfinite(s));
            REQUIRE(s >= -1.0f);
            REQUIRE(s <= 1.0f);
        }
    }
}
