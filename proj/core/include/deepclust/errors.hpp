#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace deepclust {

// Base of every error thrown by the library. Each subclass names one
// failure kind so callers (and the CLI) can map it to a message.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "Error"; }
};

#define DEEPCLUST_ERROR(Name)                                              \
    class Name : public Error {                                            \
    public:                                                                \
        using Error::Error;                                                \
        const char* kind() const noexcept override { return #Name; }       \
    }

DEEPCLUST_ERROR(ZeroVector);
DEEPCLUST_ERROR(NotScalar);
DEEPCLUST_ERROR(ShapeMismatch);
DEEPCLUST_ERROR(EmptyBatch);
DEEPCLUST_ERROR(LengthMismatch);
DEEPCLUST_ERROR(SingularCovariance);
DEEPCLUST_ERROR(TooFewSamples);
DEEPCLUST_ERROR(DegenerateComponent);
DEEPCLUST_ERROR(MissingClass);
DEEPCLUST_ERROR(NonFiniteLoss);
DEEPCLUST_ERROR(InvalidSpec);
DEEPCLUST_ERROR(InvalidConfig);
DEEPCLUST_ERROR(MissingColumn);
DEEPCLUST_ERROR(DimensionMismatch);
DEEPCLUST_ERROR(EmptyInput);
DEEPCLUST_ERROR(SingleClass);
DEEPCLUST_ERROR(DegenerateDistances);
DEEPCLUST_ERROR(IoError);

#undef DEEPCLUST_ERROR

// CSV / checkpoint parse failure. `line` is 1-based; 0 when not tied to a line.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }
    const char* kind() const noexcept override { return "ParseError"; }

private:
    std::size_t line_;
};

}  // namespace deepclust
