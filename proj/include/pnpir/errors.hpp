#pragma once

#include <stdexcept>
#include <string>

namespace pnpir {

/// Shape, range or argument contract violated by the caller.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// File or codec failure.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// NaN or Inf detected in an image.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// External denoiser failure. `phase()` names the protocol step that failed
/// (spawn, write-request, read-response, protocol, timeout, remote).
class DenoiserError : public std::runtime_error {
public:
    DenoiserError(std::string phase, const std::string& what)
        : std::runtime_error("denoiser " + phase + ": " + what), phase_(std::move(phase)) {}

    const std::string& phase() const noexcept { return phase_; }

private:
    std::string phase_;
};

} // namespace pnpir
