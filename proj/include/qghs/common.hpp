/// Shared aliases and error type.
#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qghs {

using real = double;
using cplx = std::complex<double>;

/// Library error. `what()` starts with a stable kind tag, e.g.
/// "invalid-parameter: ...", so callers and tests can match on it.
class Error : public std::runtime_error {
public:
    Error(const std::string& kind, const std::string& msg)
        : std::runtime_error(kind + ": " + msg), kind_(kind) {}
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

[[noreturn]] inline void fail(const std::string& kind, const std::string& msg) {
    throw Error(kind, msg);
}

inline void require(bool cond, const std::string& kind, const std::string& msg) {
    if (!cond) fail(kind, msg);
}

inline constexpr real pi = 3.14159265358979323846;

} // namespace qghs
