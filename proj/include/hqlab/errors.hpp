#pragma once

#include <stdexcept>
#include <string>

namespace hqlab {

/// Base of every error raised by the library. `name()` is the short tag the
/// CLI prints on standard error.
class Error : public std::runtime_error {
public:
    Error(std::string name, const std::string& what)
        : std::runtime_error(what), name_(std::move(name)) {}

    [[nodiscard]] const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

/// Argument outside the operation's domain (bad index, k out of range, ...).
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error("domain error", what) {}
};

/// An eigenvalue vector or Hessian left the Garding cone the operator needs.
/// `index` is the offending grid point (or -1 when not grid related).
class ConeViolation : public Error {
public:
    explicit ConeViolation(const std::string& what, long index = -1)
        : Error("cone violation", what), index_(index) {}

    [[nodiscard]] long index() const noexcept { return index_; }

private:
    long index_;
};

/// All gradient components equal: the Cauchy-Schwarz denominator vanishes.
class DegenerateError : public Error {
public:
    explicit DegenerateError(const std::string& what) : Error("degenerate", what) {}
};

/// Internal consistency check between equivalent formulas failed.
class ConsistencyError : public Error {
public:
    explicit ConsistencyError(const std::string& what) : Error("consistency error", what) {}
};

/// Invalid user input to the front end (unknown key, bad preset, ...).
class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error("usage error", what) {}
};

}  // namespace hqlab
