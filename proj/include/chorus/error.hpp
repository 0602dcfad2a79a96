#pragma once

#include <stdexcept>
#include <string>

namespace chorus {

enum class Err {
    NotFound,
    MalformedHeader,
    UnsupportedFormat,
    IoFailure,
    TooShort,
    RateMismatch,
    InvalidParams,
    RateOutOfRange,
    OutOfRange,
    SilentSignal,
    SilentNoise,
    ShapeMismatch,
    ModeMisuse,
    TooFewFrames,
    LabelOutOfRange,
    LengthMismatch,
    TooFewSamples,
    ClassTooSmall,
    NonFiniteLoss,
    EmptyGrid,
    BadMagic,
    VersionMismatch,
    EmptyMatrix,
    Empty,
    Usage,
};

inline const char* err_name(Err e) {
    switch (e) {
        case Err::NotFound: return "NotFound";
        case Err::MalformedHeader: return "MalformedHeader";
        case Err::UnsupportedFormat: return "UnsupportedFormat";
        case Err::IoFailure: return "IoFailure";
        case Err::TooShort: return "TooShort";
        case Err::RateMismatch: return "RateMismatch";
        case Err::InvalidParams: return "InvalidParams";
        case Err::RateOutOfRange: return "RateOutOfRange";
        case Err::OutOfRange: return "OutOfRange";
        case Err::SilentSignal: return "SilentSignal";
        case Err::SilentNoise: return "SilentNoise";
        case Err::ShapeMismatch: return "ShapeMismatch";
        case Err::ModeMisuse: return "ModeMisuse";
        case Err::TooFewFrames: return "TooFewFrames";
        case Err::LabelOutOfRange: return "LabelOutOfRange";
        case Err::LengthMismatch: return "LengthMismatch";
        case Err::TooFewSamples: return "TooFewSamples";
        case Err::ClassTooSmall: return "ClassTooSmall";
        case Err::NonFiniteLoss: return "NonFiniteLoss";
        case Err::EmptyGrid: return "EmptyGrid";
        case Err::BadMagic: return "BadMagic";
        case Err::VersionMismatch: return "VersionMismatch";
        case Err::EmptyMatrix: return "EmptyMatrix";
        case Err::Empty: return "Empty";
        case Err::Usage: return "Usage";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(Err code, const std::string& what)
        : std::runtime_error(std::string(err_name(code)) + ": " + what), code_(code) {}

    Err code() const noexcept { return code_; }

private:
    Err code_;
};

} // namespace chorus

#define CHORUS_REQUIRE(cond, code, msg)                  \
    do {                                                 \
        if (!(cond)) throw ::chorus::Error((code), (msg)); \
    } while (0)
