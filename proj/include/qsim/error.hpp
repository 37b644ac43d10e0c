#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qsim {

// Base of every error raised by the library. The CLI maps each subclass to an
// exit code (see exit_code()).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad parameter, dimension mismatch, unknown policy/profile name, ...
class ConfigError : public Error {
public:
    using Error::Error;
};

// Non-finite or otherwise unusable data entering the pipeline.
class IngestError : public Error {
public:
    IngestError(std::int64_t step, const std::string& what)
        : Error("step " + std::to_string(step) + ": " + what), step_(step) {}

    [[nodiscard]] std::int64_t step() const noexcept { return step_; }

private:
    std::int64_t step_;
};

class IoError : public Error {
public:
    using Error::Error;
};

// A stream ran out before an experiment could consume its slice.
class TruncationError : public Error {
public:
    TruncationError(std::size_t needed, std::size_t available)
        : Error("stream exhausted: need " + std::to_string(needed) + " vectors, have " +
                std::to_string(available) + " (short by " +
                std::to_string(needed - available) + ")"),
          needed_(needed),
          available_(available) {}

    [[nodiscard]] std::size_t needed() const noexcept { return needed_; }
    [[nodiscard]] std::size_t available() const noexcept { return available_; }

private:
    std::size_t needed_;
    std::size_t available_;
};

class InvariantError : public Error {
public:
    using Error::Error;
};

inline int exit_code(const Error& e) noexcept {
    if (dynamic_cast<const ConfigError*>(&e)) return 1;
    if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const IngestError*>(&e) ||
        dynamic_cast<const TruncationError*>(&e))
        return 2;
    return 3;
}

}  // namespace qsim
