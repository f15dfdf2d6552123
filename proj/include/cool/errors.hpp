#pragma once

#include <stdexcept>
#include <string>

namespace cool {

class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Invalid user-supplied values. field() names the offending input.
class ValidationError : public Error
{
public:
    ValidationError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }
private:
    std::string field_;
};

class UnsupportedError : public Error { public: using Error::Error; };
class DomainError : public Error { public: using Error::Error; };
class DimensionError : public Error { public: using Error::Error; };
class SpaceError : public Error { public: using Error::Error; };

// A moment or amplitude left the representable range during propagation.
class DivergenceError : public Error
{
public:
    DivergenceError(std::size_t segment, const std::string& what)
        : Error("segment " + std::to_string(segment) + ": " + what), segment_(segment) {}
    std::size_t segment() const noexcept { return segment_; }
private:
    std::size_t segment_;
};

class PhysicalityError : public Error { public: using Error::Error; };
class NoSteadyStateError : public Error { public: using Error::Error; };
class TruncationError : public Error { public: using Error::Error; };
class OptimizationError : public Error { public: using Error::Error; };
class ConfigError : public Error { public: using Error::Error; };

} // namespace cool
