#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace anrl {

// Base for all library errors so callers can catch anrl failures as one family.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor shapes incompatible with the requested operation.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// Scalar argument outside its contract (invalid calibration range, bad nibble, ...).
class RangeError : public Error {
public:
    explicit RangeError(const std::string& msg) : Error(msg) {}
};

// Invalid model/encoder/backbone configuration.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Integer accumulator would leave the 32-bit range. Wrapping is never silent.
class OverflowError : public Error {
public:
    explicit OverflowError(const std::string& msg) : Error(msg) {}
};

// A decode step would exceed max_context. Carries the failing global position
// (1-based; prefill tokens count toward it) and the decode step ordinal.
class ContextOverflowError : public Error {
public:
    ContextOverflowError(const std::string& msg, int64_t position, int64_t decode_step)
        : Error(msg), position(position), decode_step(decode_step) {}
    int64_t position;
    int64_t decode_step;
};

// Malformed serialized artifact (bundle, raw tensor file, report).
class FormatError : public Error {
public:
    explicit FormatError(const std::string& msg) : Error(msg) {}
};

}  // namespace anrl
