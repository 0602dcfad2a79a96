#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "chorus/error.hpp"

namespace chorus {

// Mono audio in [-1, 1]. The unit every stage of the pipeline works on.
struct AudioClip {
    std::vector<float> samples;
    int sample_rate_hz = 0;

    double duration_s() const {
        return sample_rate_hz > 0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
    }

    void validate() const {
        CHORUS_REQUIRE(sample_rate_hz > 0, Err::InvalidParams, "sample rate must be positive");
        for (float s : samples)
            CHORUS_REQUIRE(std::isfinite(s), Err::InvalidParams, "clip contains non-finite sample");
    }
};

namespace wav_detail {

inline std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_u16(std::vector<unsigned char>& b, std::uint16_t v) {
    b.push_back(static_cast<unsigned char>(v & 0xff));
    b.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
}

inline void put_u32(std::vector<unsigned char>& b, std::uint32_t v) {
    b.push_back(static_cast<unsigned char>(v & 0xff));
    b.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    b.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    b.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

} // namespace wav_detail

// RIFF/WAVE PCM-16 reader. fmt/data chunks in any order, unknown chunks
// skipped (word-aligned). Stereo is downmixed by per-sample average.
inline AudioClip read_wav(const std::string& path) {
    using namespace wav_detail;

    std::ifstream in(path, std::ios::binary);
    CHORUS_REQUIRE(in.good(), Err::NotFound, "cannot open " + path);
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    CHORUS_REQUIRE(buf.size() >= 12, Err::MalformedHeader, "file too small for RIFF header");
    CHORUS_REQUIRE(std::memcmp(buf.data(), "RIFF", 4) == 0, Err::MalformedHeader, "missing RIFF magic");
    CHORUS_REQUIRE(std::memcmp(buf.data() + 8, "WAVE", 4) == 0, Err::MalformedHeader, "missing WAVE magic");

    bool have_fmt = false;
    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    const unsigned char* data_ptr = nullptr;
    std::uint32_t data_size = 0;
    bool have_data = false;

    std::size_t off = 12;
    while (off + 8 <= buf.size()) {
        const char* id = reinterpret_cast<const char*>(buf.data() + off);
        const std::uint32_t size = read_u32(buf.data() + off + 4);
        off += 8;
        CHORUS_REQUIRE(off + size <= buf.size(), Err::MalformedHeader, "chunk overruns file");
        if (std::memcmp(id, "fmt ", 4) == 0) {
            CHORUS_REQUIRE(size >= 16, Err::MalformedHeader, "fmt chunk too small");
            format = read_u16(buf.data() + off);
            channels = read_u16(buf.data() + off + 2);
            rate = read_u32(buf.data() + off + 4);
            bits = read_u16(buf.data() + off + 14);
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            data_ptr = buf.data() + off;
            data_size = size;
            have_data = true;
        }
        off += size + (size & 1); // chunks are word-aligned
    }
    CHORUS_REQUIRE(have_fmt, Err::MalformedHeader, "no fmt chunk");
    CHORUS_REQUIRE(have_data, Err::MalformedHeader, "no data chunk");
    CHORUS_REQUIRE(format == 1, Err::UnsupportedFormat, "only PCM supported");
    CHORUS_REQUIRE(bits == 16, Err::UnsupportedFormat, "only 16-bit supported");
    CHORUS_REQUIRE(channels == 1 || channels == 2, Err::UnsupportedFormat,
                   "only mono or stereo supported");
    CHORUS_REQUIRE(rate > 0, Err::MalformedHeader, "zero sample rate");
    const std::uint32_t block = 2u * channels;
    CHORUS_REQUIRE(data_size % block == 0, Err::MalformedHeader, "data size not frame-aligned");

    const std::size_t n_frames = data_size / block;
    AudioClip clip;
    clip.sample_rate_hz = static_cast<int>(rate);
    clip.samples.resize(n_frames);
    constexpr float scale = 1.0f / 32768.0f;
    for (std::size_t i = 0; i < n_frames; ++i) {
        const unsigned char* p = data_ptr + i * block;
        const auto s0 = static_cast<std::int16_t>(read_u16(p));
        if (channels == 1) {
            clip.samples[i] = static_cast<float>(s0) * scale;
        } else {
            const auto s1 = static_cast<std::int16_t>(read_u16(p + 2));
            clip.samples[i] = (static_cast<float>(s0) + static_cast<float>(s1)) * 0.5f * scale;
        }
    }
    return clip;
}

// PCM-16 mono writer. Amplitudes are clamped, then round(x*32768) clamped
// into int16 range, so a read_wav round trip is exact on quantized data.
inline void write_wav(const AudioClip& clip, const std::string& path) {
    using namespace wav_detail;
    clip.validate();

    const std::uint32_t n = static_cast<std::uint32_t>(clip.samples.size());
    const std::uint32_t data_size = n * 2;

    std::vector<unsigned char> out;
    out.reserve(44 + data_size);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put_u32(out, 36 + data_size);
    out.insert(out.end(), {'W', 'A', 'V', 'E'});
    out.insert(out.end(), {'f', 'm', 't', ' '});
    put_u32(out, 16);
    put_u16(out, 1); // PCM
    put_u16(out, 1); // mono
    put_u32(out, static_cast<std::uint32_t>(clip.sample_rate_hz));
    put_u32(out, static_cast<std::uint32_t>(clip.sample_rate_hz) * 2);
    put_u16(out, 2);  // block align
    put_u16(out, 16); // bits
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put_u32(out, data_size);
    for (float s : clip.samples) {
        double x = static_cast<double>(s);
        if (x < -1.0) x = -1.0;
        if (x > 1.0) x = 1.0;
        long q = std::lround(x * 32768.0);
        if (q > 32767) q = 32767;
        if (q < -32768) q = -32768;
        put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    CHORUS_REQUIRE(f.good(), Err::IoFailure, "cannot open for write: " + path);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    CHORUS_REQUIRE(f.good(), Err::IoFailure, "write failed: " + path);
}

namespace resample_detail {

inline double bessel_i0(double x) {
    // Power series; converges fast for the argument range the Kaiser window uses.
    double sum = 1.0, term = 1.0;
    const double half_x = x / 2.0;
    for (int k = 1; k < 64; ++k) {
        term *= (half_x / k) * (half_x / k);
        sum += term;
        if (term < sum * 1e-18) break;
    }
    return sum;
}

} // namespace resample_detail

// Windowed-sinc (Kaiser beta=8, 32-tap) resampler. Each output sample is
// normalized by its actual kernel weight sum, which keeps DC exact away
// from the clip edges.
inline AudioClip resample(const AudioClip& clip, int target_rate_hz) {
    clip.validate();
    CHORUS_REQUIRE(target_rate_hz > 0, Err::InvalidParams, "target rate must be positive");
    if (target_rate_hz == clip.sample_rate_hz) return clip;

    const std::size_t n_in = clip.samples.size();
    const double ratio = static_cast<double>(target_rate_hz) / clip.sample_rate_hz;
    const std::size_t n_out = static_cast<std::size_t>(
        std::llround(static_cast<double>(n_in) * ratio));

    AudioClip out;
    out.sample_rate_hz = target_rate_hz;
    out.samples.resize(n_out);
    if (n_out == 0 || n_in == 0) {
        out.samples.assign(n_out, 0.0f);
        return out;
    }

    constexpr int kHalfTaps = 16; // 32 taps per phase
    constexpr double kBeta = 8.0;
    const double cutoff = ratio < 1.0 ? ratio : 1.0;

    // Tabulated kernel h(x) = cutoff*sinc(cutoff*x)*kaiser(x/half) on [0, half].
    constexpr int kTableSteps = 4096;
    const double dx = static_cast<double>(kHalfTaps) / kTableSteps;
    std::vector<double> table(kTableSteps + 2);
    const double i0_beta = resample_detail::bessel_i0(kBeta);
    const double pi = 3.14159265358979323846;
    for (int i = 0; i <= kTableSteps + 1; ++i) {
        const double x = i * dx;
        if (x > kHalfTaps) {
            table[i] = 0.0;
            continue;
        }
        const double u = x / kHalfTaps;
        const double win = resample_detail::bessel_i0(kBeta * std::sqrt(1.0 - u * u)) / i0_beta;
        const double cx = cutoff * x;
        const double s = cx == 0.0 ? 1.0 : std::sin(pi * cx) / (pi * cx);
        table[i] = cutoff * s * win;
    }
    auto kernel = [&](double x) {
        x = std::fabs(x);
        const double pos = x / dx;
        const int i = static_cast<int>(pos);
        if (i >= kTableSteps) return 0.0;
        const double frac = pos - i;
        return table[i] + frac * (table[i + 1] - table[i]);
    };

    const double step = static_cast<double>(clip.sample_rate_hz) / target_rate_hz;
    for (std::size_t n = 0; n < n_out; ++n) {
        const double t = static_cast<double>(n) * step;
        const auto k_lo = static_cast<std::int64_t>(std::ceil(t - kHalfTaps));
        const auto k_hi = static_cast<std::int64_t>(std::floor(t + kHalfTaps));
        double acc = 0.0, wsum = 0.0;
        for (std::int64_t k = k_lo; k <= k_hi; ++k) {
            const double w = kernel(t - static_cast<double>(k));
            wsum += w;
            if (k >= 0 && k < static_cast<std::int64_t>(n_in))
                acc += w * clip.samples[static_cast<std::size_t>(k)];
        }
        out.samples[n] = wsum != 0.0 ? static_cast<float>(acc / wsum) : 0.0f;
    }
    return out;
}

} // namespace chorus
