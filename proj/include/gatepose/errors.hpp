#pragma once

#include <stdexcept>
#include <string>

namespace gatepose {

/// DS-TWR timestamps that cannot produce a ToF (non-positive denominator).
struct InvalidTimestampsError : std::runtime_error {
    explicit InvalidTimestampsError(const std::string& what) : std::runtime_error(what) {}
};

/// No sample crossed the first-path detection threshold.
struct NoFirstPathError : std::runtime_error {
    explicit NoFirstPathError(const std::string& what) : std::runtime_error(what) {}
};

/// An extraction window would fall outside the record; never silently padded.
struct TruncatedWindowError : std::runtime_error {
    explicit TruncatedWindowError(const std::string& what) : std::runtime_error(what) {}
};

/// Argument outside a model's calibrated domain.
struct OutOfDomainError : std::runtime_error {
    explicit OutOfDomainError(const std::string& what) : std::runtime_error(what) {}
};

/// Sliding window queried before it holds a full set of samples.
struct WindowNotReadyError : std::runtime_error {
    explicit WindowNotReadyError(const std::string& what) : std::runtime_error(what) {}
};

/// Training produced a non-finite loss.
struct DivergedError : std::runtime_error {
    explicit DivergedError(const std::string& what) : std::runtime_error(what) {}
};

/// File could not be read/written or does not parse.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gatepose
