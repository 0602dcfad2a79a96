#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "chorus/audio_io.hpp"
#include "chorus/error.hpp"
#include "chorus/noise.hpp"
#include "chorus/rng.hpp"

namespace chorus {

// Parametric vocalization model: syllables of linear chirps with harmonics,
// raised-cosine envelopes and optional amplitude modulation.
struct SpeciesModel {
    std::string name;
    double f0_lo = 2000.0, f0_hi = 2500.0;
    double slope_lo = 0.0, slope_hi = 0.0; // Hz per second
    int n_syllables_lo = 2, n_syllables_hi = 4;
    double syllable_dur_lo = 0.08, syllable_dur_hi = 0.15;
    double gap_lo = 0.04, gap_hi = 0.08;
    std::vector<double> harmonic_weights{1.0};
    double am_rate_lo = 0.0, am_rate_hi = 0.0; // 0 disables AM

    void validate(int sample_rate_hz) const {
        CHORUS_REQUIRE(!name.empty(), Err::InvalidParams, "species needs a name");
        CHORUS_REQUIRE(f0_lo > 0.0 && f0_lo <= f0_hi, Err::InvalidParams, "bad f0 range");
        CHORUS_REQUIRE(f0_hi < sample_rate_hz / 2.0, Err::InvalidParams, "f0 above Nyquist");
        CHORUS_REQUIRE(slope_lo <= slope_hi, Err::InvalidParams, "bad slope range");
        CHORUS_REQUIRE(n_syllables_lo >= 1 && n_syllables_lo <= n_syllables_hi,
                       Err::InvalidParams, "bad syllable count range");
        CHORUS_REQUIRE(syllable_dur_lo > 0.0 && syllable_dur_lo <= syllable_dur_hi,
                       Err::InvalidParams, "bad syllable duration range");
        CHORUS_REQUIRE(gap_lo >= 0.0 && gap_lo <= gap_hi, Err::InvalidParams, "bad gap range");
        CHORUS_REQUIRE(!harmonic_weights.empty(), Err::InvalidParams, "need harmonic weights");
        double sum = 0.0;
        for (double w : harmonic_weights) {
            CHORUS_REQUIRE(w >= 0.0, Err::InvalidParams, "negative harmonic weight");
            sum += w;
        }
        CHORUS_REQUIRE(sum <= 1.5, Err::InvalidParams, "harmonic weights sum above 1.5");
        CHORUS_REQUIRE(am_rate_lo >= 0.0 && am_rate_lo <= am_rate_hi, Err::InvalidParams,
                       "bad am range");
    }
};

struct SoundscapeConfig {
    std::vector<SpeciesModel> species;
    int clips_per_species = 100;
    double clip_duration_s = 5.0;
    int sample_rate_hz = 16000;
    double background = 0.05; // pink-noise bed RMS
    double distractor_probability = 0.25;

    void validate() const {
        CHORUS_REQUIRE(species.size() >= 2, Err::InvalidParams, "need at least 2 species");
        CHORUS_REQUIRE(clip_duration_s >= 1.0, Err::InvalidParams, "clips must be >= 1 s");
        CHORUS_REQUIRE(clips_per_species >= 1, Err::InvalidParams, "need clips_per_species >= 1");
        CHORUS_REQUIRE(sample_rate_hz > 0, Err::InvalidParams, "bad sample rate");
        CHORUS_REQUIRE(background >= 0.0 && background <= 1.0, Err::InvalidParams,
                       "background outside [0, 1]");
        CHORUS_REQUIRE(distractor_probability >= 0.0 && distractor_probability <= 1.0,
                       Err::InvalidParams, "distractor probability outside [0, 1]");
        for (const auto& s : species) s.validate(sample_rate_hz);
    }
};

inline void to_json(nlohmann::json& j, const SpeciesModel& s) {
    j = {{"name", s.name},
         {"f0_hz", {s.f0_lo, s.f0_hi}},
         {"chirp_slope_hz_per_s", {s.slope_lo, s.slope_hi}},
         {"n_syllables", {s.n_syllables_lo, s.n_syllables_hi}},
         {"syllable_dur_s", {s.syllable_dur_lo, s.syllable_dur_hi}},
         {"gap_s", {s.gap_lo, s.gap_hi}},
         {"harmonic_weights", s.harmonic_weights},
         {"am_rate_hz", {s.am_rate_lo, s.am_rate_hi}}};
}

inline void from_json(const nlohmann::json& j, SpeciesModel& s) {
    j.at("name").get_to(s.name);
    s.f0_lo = j.at("f0_hz")[0].get<double>();
    s.f0_hi = j.at("f0_hz")[1].get<double>();
    if (j.contains("chirp_slope_hz_per_s")) {
        s.slope_lo = j["chirp_slope_hz_per_s"][0].get<double>();
        s.slope_hi = j["chirp_slope_hz_per_s"][1].get<double>();
    }
    if (j.contains("n_syllables")) {
        s.n_syllables_lo = j["n_syllables"][0].get<int>();
        s.n_syllables_hi = j["n_syllables"][1].get<int>();
    }
    if (j.contains("syllable_dur_s")) {
        s.syllable_dur_lo = j["syllable_dur_s"][0].get<double>();
        s.syllable_dur_hi = j["syllable_dur_s"][1].get<double>();
    }
    if (j.contains("gap_s")) {
        s.gap_lo = j["gap_s"][0].get<double>();
        s.gap_hi = j["gap_s"][1].get<double>();
    }
    if (j.contains("harmonic_weights"))
        s.harmonic_weights = j["harmonic_weights"].get<std::vector<double>>();
    if (j.contains("am_rate_hz")) {
        s.am_rate_lo = j["am_rate_hz"][0].get<double>();
        s.am_rate_hi = j["am_rate_hz"][1].get<double>();
    }
}

inline void to_json(nlohmann::json& j, const SoundscapeConfig& c) {
    j = {{"species", c.species},
         {"clips_per_species", c.clips_per_species},
         {"clip_duration_s", c.clip_duration_s},
         {"sample_rate_hz", c.sample_rate_hz},
         {"background", c.background},
         {"distractor_probability", c.distractor_probability}};
}

inline void from_json(const nlohmann::json& j, SoundscapeConfig& c) {
    if (j.contains("species")) c.species = j["species"].get<std::vector<SpeciesModel>>();
    if (j.contains("clips_per_species")) c.clips_per_species = j["clips_per_species"].get<int>();
    if (j.contains("clip_duration_s")) c.clip_duration_s = j["clip_duration_s"].get<double>();
    if (j.contains("sample_rate_hz")) c.sample_rate_hz = j["sample_rate_hz"].get<int>();
    if (j.contains("background")) c.background = j["background"].get<double>();
    if (j.contains("distractor_probability"))
        c.distractor_probability = j["distractor_probability"].get<double>();
}

// Eight species over distinct frequency bands, except the last two which
// share a band and differ only in temporal structure (chirp direction,
// syllable rhythm, AM). Averaged spectra cannot separate that pair; temporal
// modeling can.
inline SoundscapeConfig default_soundscape_config() {
    SoundscapeConfig cfg;
    auto make = [](std::string name, double f_lo, double f_hi, double s_lo, double s_hi,
                   int n_lo, int n_hi, double d_lo, double d_hi, double g_lo, double g_hi,
                   std::vector<double> harm, double am_lo, double am_hi) {
        SpeciesModel m;
        m.name = std::move(name);
        m.f0_lo = f_lo;
        m.f0_hi = f_hi;
        m.slope_lo = s_lo;
        m.slope_hi = s_hi;
        m.n_syllables_lo = n_lo;
        m.n_syllables_hi = n_hi;
        m.syllable_dur_lo = d_lo;
        m.syllable_dur_hi = d_hi;
        m.gap_lo = g_lo;
        m.gap_hi = g_hi;
        m.harmonic_weights = std::move(harm);
        m.am_rate_lo = am_lo;
        m.am_rate_hi = am_hi;
        return m;
    };
    cfg.species = {
        make("reed-whistler", 1000, 1300, 0, 200, 2, 4, 0.12, 0.20, 0.05, 0.10, {1.0, 0.35}, 0, 0),
        make("dusk-piper", 1800, 2100, -300, 0, 3, 5, 0.08, 0.14, 0.04, 0.08, {1.0}, 0, 0),
        make("amber-chat", 2600, 2900, 200, 600, 2, 3, 0.10, 0.18, 0.06, 0.12, {1.0, 0.3, 0.12}, 0, 0),
        make("hill-flicker", 4000, 4400, -600, -200, 4, 6, 0.05, 0.09, 0.03, 0.06, {1.0, 0.25}, 20, 30),
        make("shade-thrush", 5000, 5500, 0, 400, 2, 4, 0.10, 0.16, 0.05, 0.09, {1.0}, 0, 0),
        make("brook-tinker", 6200, 6800, -400, 400, 3, 5, 0.06, 0.10, 0.04, 0.07, {1.0, 0.2}, 0, 0),
        // hard pair: same band, different temporal signature
        make("sedge-triller", 3200, 3500, 800, 1200, 4, 6, 0.06, 0.10, 0.03, 0.05, {1.0, 0.3}, 0, 0),
        make("marsh-triller", 3200, 3500, -1200, -800, 2, 3, 0.16, 0.24, 0.08, 0.12, {1.0, 0.3}, 8, 12),
    };
    return cfg;
}

// One call: syllables of linear chirps, harmonics per weight list,
// raised-cosine envelope, optional AM, peak-normalized to 0.7.
inline AudioClip synth_call(const SpeciesModel& species, std::uint64_t seed, int rate) {
    species.validate(rate);
    Rng rng = Rng::derive(seed, {0x63616c6c});

    const int n_syl = static_cast<int>(rng.uniform_int(species.n_syllables_lo, species.n_syllables_hi));
    const double f0 = rng.uniform(species.f0_lo, species.f0_hi);
    const double slope = rng.uniform(species.slope_lo, species.slope_hi);
    const double am_rate = species.am_rate_hi > 0.0
                               ? rng.uniform(species.am_rate_lo, species.am_rate_hi)
                               : 0.0;
    constexpr double kAmDepth = 0.5;
    const double two_pi = 2.0 * 3.14159265358979323846;

    std::vector<float> out;
    for (int s = 0; s < n_syl; ++s) {
        const double dur = rng.uniform(species.syllable_dur_lo, species.syllable_dur_hi);
        const auto n = static_cast<std::size_t>(std::llround(dur * rate));
        const std::size_t base = out.size();
        out.resize(base + n, 0.0f);
        for (std::size_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / rate;
            const double phase = two_pi * (f0 * t + 0.5 * slope * t * t);
            double v = 0.0;
            for (std::size_t h = 0; h < species.harmonic_weights.size(); ++h) {
                const double mult = static_cast<double>(h + 1);
                const double f_inst = mult * (f0 + slope * t);
                if (f_inst <= 0.0 || f_inst >= 0.47 * rate) continue;
                v += species.harmonic_weights[h] * std::sin(mult * phase);
            }
            const double env = 0.5 - 0.5 * std::cos(two_pi * static_cast<double>(i) /
                                                    static_cast<double>(std::max<std::size_t>(n - 1, 1)));
            double am = 1.0;
            if (am_rate > 0.0)
                am = 1.0 - kAmDepth * 0.5 * (1.0 - std::cos(two_pi * am_rate * t));
            out[base + i] = static_cast<float>(v * env * am);
        }
        if (s + 1 < n_syl) {
            const double gap = rng.uniform(species.gap_lo, species.gap_hi);
            out.resize(out.size() + static_cast<std::size_t>(std::llround(gap * rate)), 0.0f);
        }
    }

    float peak = 0.0f;
    for (float v : out) peak = std::max(peak, std::fabs(v));
    if (peak > 0.0f) {
        const float scale = 0.7f / peak;
        for (auto& v : out) v *= scale;
    }

    AudioClip clip;
    clip.sample_rate_hz = rate;
    clip.samples = std::move(out);
    return clip;
}

namespace synth_detail {

// Non-overlapping placement by rejection; returns false when no slot fits.
inline bool place_call(std::vector<std::pair<std::size_t, std::size_t>>& occupied,
                       std::size_t clip_len, std::size_t call_len, Rng& rng,
                       std::size_t& onset_out) {
    if (call_len > clip_len) return false;
    for (int attempt = 0; attempt < 64; ++attempt) {
        const std::size_t onset = rng.uniform_index(clip_len - call_len + 1);
        bool clash = false;
        for (const auto& [s, e] : occupied)
            if (onset < e && onset + call_len > s) {
                clash = true;
                break;
            }
        if (!clash) {
            occupied.emplace_back(onset, onset + call_len);
            onset_out = onset;
            return true;
        }
    }
    return false;
}

} // namespace synth_detail

// Where a synthesized call landed inside a clip; used for ground-truth
// bookkeeping in tests and diagnostics.
struct PlacedCall {
    std::size_t onset = 0;
    std::size_t length = 0;
    double energy = 0.0;
    bool distractor = false;
};

// Pink-noise bed plus 1-3 calls of the labeled species, optionally one
// distractor call of another species 6 dB down. Calls never overlap, so
// with the bed off the clip energy is the sum of the call energies.
inline AudioClip synth_clip(const SoundscapeConfig& cfg, std::size_t species_index,
                            std::uint64_t seed, std::vector<PlacedCall>* placements = nullptr) {
    cfg.validate();
    CHORUS_REQUIRE(species_index < cfg.species.size(), Err::OutOfRange, "bad species index");
    Rng rng = Rng::derive(seed, {0x636c6970, species_index});

    const auto n = static_cast<std::size_t>(std::llround(cfg.clip_duration_s * cfg.sample_rate_hz));
    std::vector<double> acc(n, 0.0);

    if (cfg.background > 0.0) {
        Rng bed_rng = Rng::derive(seed, {0x626564, species_index});
        const auto bed = pink_noise(n, bed_rng);
        for (std::size_t i = 0; i < n; ++i) acc[i] = bed[i] * cfg.background;
    }

    std::vector<std::pair<std::size_t, std::size_t>> occupied;
    const int n_calls = static_cast<int>(rng.uniform_int(1, 3));
    for (int c = 0; c < n_calls; ++c) {
        const std::uint64_t call_seed = rng.next_u64();
        AudioClip call = synth_call(cfg.species[species_index], call_seed, cfg.sample_rate_hz);
        std::size_t onset = 0;
        if (!synth_detail::place_call(occupied, n, call.samples.size(), rng, onset)) continue;
        double energy = 0.0;
        for (std::size_t i = 0; i < call.samples.size(); ++i) {
            acc[onset + i] += call.samples[i];
            energy += static_cast<double>(call.samples[i]) * call.samples[i];
        }
        if (placements) placements->push_back({onset, call.samples.size(), energy, false});
    }

    if (cfg.species.size() > 1 && rng.bernoulli(cfg.distractor_probability)) {
        std::size_t other = rng.uniform_index(cfg.species.size() - 1);
        if (other >= species_index) ++other;
        const std::uint64_t call_seed = rng.next_u64();
        AudioClip call = synth_call(cfg.species[other], call_seed, cfg.sample_rate_hz);
        std::size_t onset = 0;
        if (synth_detail::place_call(occupied, n, call.samples.size(), rng, onset)) {
            const double gain = std::pow(10.0, -6.0 / 20.0);
            double energy = 0.0;
            for (std::size_t i = 0; i < call.samples.size(); ++i) {
                const double v = gain * call.samples[i];
                acc[onset + i] += v;
                energy += v * v;
            }
            if (placements) placements->push_back({onset, call.samples.size(), energy, true});
        }
    }

    double peak = 0.0;
    for (double v : acc) peak = std::max(peak, std::fabs(v));
    const double rescale = peak > 1.0 ? 0.99 / peak : 1.0;

    AudioClip clip;
    clip.sample_rate_hz = cfg.sample_rate_hz;
    clip.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) clip.samples[i] = static_cast<float>(acc[i] * rescale);
    return clip;
}

// Writes clips_per_species x |species| WAVs plus manifest.csv with header
// path,species,location,date,duration_s. Paths are relative to the manifest
// directory; rows are ordered by (species, clip index).
inline std::string generate_dataset(const SoundscapeConfig& cfg, const std::string& out_dir,
                                    std::uint64_t seed, int n_threads = 1) {
    cfg.validate();
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    CHORUS_REQUIRE(!ec, Err::IoFailure, "cannot create " + out_dir);

    struct Row {
        std::string rel_path;
        std::string species;
        std::string location;
        std::string date;
        double duration_s;
    };
    const std::size_t n_species = cfg.species.size();
    const std::size_t per = static_cast<std::size_t>(cfg.clips_per_species);
    std::vector<Row> rows(n_species * per);

    auto job = [&](std::size_t flat) {
        const std::size_t s = flat / per;
        const std::size_t i = flat % per;
        const auto& species = cfg.species[s];
        const std::string dir = out_dir + "/" + species.name;
        std::uint64_t state = seed ^ (0x9e3779b97f4a7c15ULL * (flat + 1));
        const std::uint64_t clip_seed = detail::splitmix64(state);
        AudioClip clip = synth_clip(cfg, s, clip_seed);
        char name[32];
        std::snprintf(name, sizeof(name), "clip_%04zu.wav", i);
        write_wav(clip, dir + "/" + name);
        Row& r = rows[flat];
        r.rel_path = species.name + "/" + name;
        r.species = species.name;
        char loc[16];
        std::snprintf(loc, sizeof(loc), "site-%02zu", (s * 7 + i) % 12);
        r.location = loc;
        char date[16];
        std::snprintf(date, sizeof(date), "2024-%02zu-%02zu", 1 + (i % 12), 1 + (i % 28));
        r.date = date;
        r.duration_s = clip.duration_s();
    };

    for (std::size_t s = 0; s < n_species; ++s) {
        fs::create_directories(out_dir + "/" + cfg.species[s].name, ec);
        CHORUS_REQUIRE(!ec, Err::IoFailure, "cannot create species dir");
    }

    const std::size_t total = rows.size();
    if (n_threads <= 1) {
        for (std::size_t f = 0; f < total; ++f) job(f);
    } else {
        std::vector<std::thread> workers;
        std::size_t chunk = (total + static_cast<std::size_t>(n_threads) - 1) /
                            static_cast<std::size_t>(n_threads);
        for (int t = 0; t < n_threads; ++t) {
            const std::size_t lo = static_cast<std::size_t>(t) * chunk;
            const std::size_t hi = std::min(total, lo + chunk);
            if (lo >= hi) break;
            workers.emplace_back([&, lo, hi] {
                for (std::size_t f = lo; f < hi; ++f) job(f);
            });
        }
        for (auto& w : workers) w.join();
    }

    const std::string manifest_path = out_dir + "/manifest.csv";
    std::ofstream m(manifest_path, std::ios::trunc);
    CHORUS_REQUIRE(m.good(), Err::IoFailure, "cannot write manifest");
    m << "path,species,location,date,duration_s\n";
    char dur[32];
    for (const auto& r : rows) {
        std::snprintf(dur, sizeof(dur), "%.3f", r.duration_s);
        m << r.rel_path << "," << r.species << "," << r.location << "," << r.date << "," << dur
          << "\n";
    }
    CHORUS_REQUIRE(m.good(), Err::IoFailure, "manifest write failed");
    return manifest_path;
}

} // namespace chorus
