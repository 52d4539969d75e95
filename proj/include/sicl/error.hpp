#pragma once

#include <stdexcept>
#include <string>

namespace sicl {

enum class ErrorKind {
    InvalidInput,
    ConstraintViolation,
    Capacity,
    DegenerateInput,
    SampleSize,
    Contract,
    Numeric,
    Io,
};

const char* to_string(ErrorKind kind);

// Single exception type for the library; callers switch on kind().
class Error : public std::runtime_error {
   public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

   private:
    ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace sicl
