#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "chorus/audio_io.hpp"
#include "chorus/rng.hpp"
#include "oracles.hpp"

using chorus::AudioClip;
using chorus::Err;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

// Builds raw WAV bytes directly so reader tests do not depend on write_wav.
std::vector<unsigned char> raw_wav(std::uint16_t format, std::uint16_t channels,
                                   std::uint32_t rate, std::uint16_t bits,
                                   const std::vector<std::int16_t>& interleaved) {
    std::vector<unsigned char> b;
    auto u16 = [&](std::uint16_t v) {
        b.push_back(v & 0xff);
        b.push_back((v >> 8) & 0xff);
    };
    auto u32 = [&](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) b.push_back((v >> (8 * i)) & 0xff);
    };
    const std::uint32_t data_size = static_cast<std::uint32_t>(interleaved.size() * 2);
    b.insert(b.end(), {'R', 'I', 'F', 'F'});
    u32(36 + data_size);
    b.insert(b.end(), {'W', 'A', 'V', 'E'});
    b.insert(b.end(), {'f', 'm', 't', ' '});
    u32(16);
    u16(format);
    u16(channels);
    u32(rate);
    u32(rate * channels * bits / 8);
    u16(static_cast<std::uint16_t>(channels * bits / 8));
    u16(bits);
    b.insert(b.end(), {'d', 'a', 't', 'a'});
    u32(data_size);
    for (std::int16_t s : interleaved) u16(static_cast<std::uint16_t>(s));
    return b;
}

void dump(const std::string& path, const std::vector<unsigned char>& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

std::vector<unsigned char> slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("read_wav copies header fields") {
    const auto path = temp_path("chorus_mono16k.wav");
    dump(path, raw_wav(1, 1, 16000, 16, std::vector<std::int16_t>(16000, 100)));
    const AudioClip clip = chorus::read_wav(path);
    CHECK(clip.samples.size() == 16000);
    CHECK(clip.sample_rate_hz == 16000);
}

TEST_CASE("stereo downmix averages channels") {
    const auto path = temp_path("chorus_stereo.wav");
    std::vector<std::int16_t> data;
    for (int i = 0; i < 100; ++i) {
        data.push_back(16384);  // L = +0.5
        data.push_back(-16384); // R = -0.5
    }
    dump(path, raw_wav(1, 2, 16000, 16, data));
    const AudioClip clip = chorus::read_wav(path);
    REQUIRE(clip.samples.size() == 100);
    for (float s : clip.samples) CHECK(s == 0.0f);
}

TEST_CASE("identical channels downmix to either channel exactly") {
    const auto path = temp_path("chorus_stereo_same.wav");
    std::vector<std::int16_t> data;
    for (int i = 0; i < 64; ++i) {
        const auto v = static_cast<std::int16_t>(i * 411 - 13000);
        data.push_back(v);
        data.push_back(v);
    }
    dump(path, raw_wav(1, 2, 8000, 16, data));
    const AudioClip clip = chorus::read_wav(path);
    for (int i = 0; i < 64; ++i)
        CHECK(clip.samples[static_cast<std::size_t>(i)] ==
              static_cast<float>(i * 411 - 13000) / 32768.0f);
}

TEST_CASE("sample scaling is 1/32768") {
    const auto path = temp_path("chorus_fullscale.wav");
    dump(path, raw_wav(1, 1, 16000, 16, {32767, -32768, 0}));
    const AudioClip clip = chorus::read_wav(path);
    CHECK(clip.samples[0] == Catch::Approx(32767.0 / 32768.0).epsilon(1e-9));
    CHECK(clip.samples[1] == -1.0f);
    CHECK(clip.samples[2] == 0.0f);
}

TEST_CASE("write_wav clamps out-of-range amplitudes") {
    AudioClip clip;
    clip.sample_rate_hz = 16000;
    clip.samples = {2.0f, -3.0f, 0.25f};
    const auto path = temp_path("chorus_clamp.wav");
    chorus::write_wav(clip, path);
    const auto bytes = slurp(path);
    const auto* data = bytes.data() + 44;
    const auto s0 = static_cast<std::int16_t>(data[0] | (data[1] << 8));
    const auto s1 = static_cast<std::int16_t>(data[2] | (data[3] << 8));
    CHECK(s0 == 32767);
    CHECK(s1 == -32768);
}

TEST_CASE("empty clip writes a valid zero-length data chunk") {
    AudioClip clip;
    clip.sample_rate_hz = 44100;
    const auto path = temp_path("chorus_empty.wav");
    chorus::write_wav(clip, path);
    const AudioClip back = chorus::read_wav(path);
    CHECK(back.samples.empty());
    CHECK(back.sample_rate_hz == 44100);
}

TEST_CASE("round trip on quantized data is bit-exact") {
    chorus::Rng rng(7);
    AudioClip clip;
    clip.sample_rate_hz = 16000;
    for (int i = 0; i < 5000; ++i) {
        const auto q = static_cast<std::int16_t>(rng.uniform_int(-32768, 32767));
        clip.samples.push_back(static_cast<float>(q) / 32768.0f);
    }
    const auto path = temp_path("chorus_roundtrip.wav");
    chorus::write_wav(clip, path);
    const AudioClip back = chorus::read_wav(path);
    REQUIRE(back.samples.size() == clip.samples.size());
    for (std::size_t i = 0; i < clip.samples.size(); ++i)
        REQUIRE(back.samples[i] == clip.samples[i]);

    // writing the re-read clip reproduces the file byte for byte
    const auto path2 = temp_path("chorus_roundtrip2.wav");
    chorus::write_wav(back, path2);
    CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("write then read stays within one quantization step") {
    chorus::Rng rng(11);
    AudioClip clip;
    clip.sample_rate_hz = 16000;
    for (int i = 0; i < 2000; ++i)
        clip.samples.push_back(static_cast<float>(rng.uniform(-0.99, 0.99)));
    const auto path = temp_path("chorus_quant.wav");
    chorus::write_wav(clip, path);
    const AudioClip back = chorus::read_wav(path);
    for (std::size_t i = 0; i < clip.samples.size(); ++i)
        CHECK(std::fabs(back.samples[i] - clip.samples[i]) <= 1.0f / 32768.0f);
}

TEST_CASE("unknown chunks are skipped") {
    auto bytes = raw_wav(1, 1, 16000, 16, {1000, 2000, 3000});
    // splice a JUNK chunk between fmt and data
    std::vector<unsigned char> junk = {'J', 'U', 'N', 'K', 6, 0, 0, 0, 1, 2, 3, 4, 5, 6};
    bytes.insert(bytes.begin() + 36, junk.begin(), junk.end());
    // fix RIFF size
    const std::uint32_t riff = static_cast<std::uint32_t>(bytes.size() - 8);
    for (int i = 0; i < 4; ++i) bytes[4 + static_cast<std::size_t>(i)] = (riff >> (8 * i)) & 0xff;
    const auto path = temp_path("chorus_junk.wav");
    dump(path, bytes);
    const AudioClip clip = chorus::read_wav(path);
    REQUIRE(clip.samples.size() == 3);
    CHECK(clip.samples[0] == Catch::Approx(1000.0 / 32768.0));
}

TEST_CASE("read_wav error taxonomy") {
    CHECK_THROWS_MATCHES(chorus::read_wav(temp_path("chorus_missing.wav")), chorus::Error,
                         Catch::Matchers::Predicate<chorus::Error>(
                             [](const chorus::Error& e) { return e.code() == Err::NotFound; }));

    const auto bad_magic = temp_path("chorus_badmagic.wav");
    auto bytes = raw_wav(1, 1, 16000, 16, {0});
    bytes[0] = 'X';
    dump(bad_magic, bytes);
    CHECK_THROWS_MATCHES(chorus::read_wav(bad_magic), chorus::Error,
                         Catch::Matchers::Predicate<chorus::Error>([](const chorus::Error& e) {
                             return e.code() == Err::MalformedHeader;
                         }));

    const auto float_fmt = temp_path("chorus_float.wav");
    dump(float_fmt, raw_wav(3, 1, 16000, 16, {0}));
    CHECK_THROWS_MATCHES(chorus::read_wav(float_fmt), chorus::Error,
                         Catch::Matchers::Predicate<chorus::Error>([](const chorus::Error& e) {
                             return e.code() == Err::UnsupportedFormat;
                         }));

    const auto eight_bit = temp_path("chorus_8bit.wav");
    dump(eight_bit, raw_wav(1, 1, 16000, 8, {0}));
    CHECK_THROWS_MATCHES(chorus::read_wav(eight_bit), chorus::Error,
                         Catch::Matchers::Predicate<chorus::Error>([](const chorus::Error& e) {
                             return e.code() == Err::UnsupportedFormat;
                         }));

    const auto three_ch = temp_path("chorus_3ch.wav");
    dump(three_ch, raw_wav(1, 3, 16000, 16, {0, 0, 0}));
    CHECK_THROWS_MATCHES(chorus::read_wav(three_ch), chorus::Error,
                         Catch::Matchers::Predicate<chorus::Error>([](const chorus::Error& e) {
                             return e.code() == Err::UnsupportedFormat;
                         }));
}

TEST_CASE("resample at the source rate is the identity") {
    const auto clip = oracles::sine_clip(500.0, 0.5, 16000);
    const AudioClip out = chorus::resample(clip, 16000);
    CHECK(out.samples == clip.samples);
}

TEST_CASE("resample preserves DC away from edges") {
    AudioClip clip;
    clip.sample_rate_hz = 16000;
    clip.samples.assign(8000, 0.3f);
    for (int target : {8000, 22050, 44100, 11025}) {
        const AudioClip out = chorus::resample(clip, target);
        REQUIRE(out.samples.size() > 200);
        for (std::size_t i = 64; i + 64 < out.samples.size(); ++i)
            REQUIRE(std::fabs(out.samples[i] - 0.3f) < 1e-3f);
    }
}

TEST_CASE("resample keeps a 1 kHz tone at 1 kHz") {
    const auto clip = oracles::sine_clip(1000.0, 2.0, 16000);
    const AudioClip out = chorus::resample(clip, 8000);
    // +-1 bin on the output-length DFT grid
    const double bin_hz = 8000.0 / static_cast<double>(out.samples.size());
    const double peak = oracles::dominant_frequency_hz(out.samples, 8000);
    CHECK(std::fabs(peak - 1000.0) <= bin_hz + 1e-9);
}

TEST_CASE("resample preserves duration within one sample period") {
    chorus::Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        AudioClip clip;
        clip.sample_rate_hz = static_cast<int>(rng.uniform_int(4000, 48000));
        clip.samples.assign(static_cast<std::size_t>(rng.uniform_int(100, 20000)), 0.1f);
        const int target = static_cast<int>(rng.uniform_int(4000, 48000));
        const AudioClip out = chorus::resample(clip, target);
        const double in_dur = clip.duration_s();
        const double out_dur = out.duration_s();
        REQUIRE(std::fabs(in_dur - out_dur) <= 1.0 / target + 1e-12);
    }
}
