#ifndef BPL_ERRORS_HPP
#define BPL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace bpl {

/// Base class for all typed failures raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Argument outside the supported domain (x <= 0, order too large, ...).
class DomainError : public Error {
public:
    explicit DomainError(const std::string& msg) : Error(msg) {}
};

/// 2x2 mode system is numerically singular for the given (k, a, bc).
class SingularMode : public Error {
public:
    explicit SingularMode(const std::string& msg) : Error(msg) {}
};

/// Mode series tail did not meet the truncation bound at the maximum order.
class NoConvergence : public Error {
public:
    explicit NoConvergence(const std::string& msg) : Error(msg) {}
};

/// Phase shift tau lies on (or too close to) the excluded lattice.
class DegenerateTau : public Error {
public:
    explicit DegenerateTau(const std::string& msg) : Error(msg) {}
};

/// Vandermonde nodes coincide or nearly coincide.
class DegenerateNodes : public Error {
public:
    explicit DegenerateNodes(const std::string& msg) : Error(msg) {}
};

/// Observation direction too close to the excluded direction set.
class DirectionTooClose : public Error {
public:
    explicit DirectionTooClose(const std::string& msg) : Error(msg) {}
};

/// Argument-matching bisection found no root inside the guaranteed window.
class NoRootInWindow : public Error {
public:
    explicit NoRootInWindow(const std::string& msg) : Error(msg) {}
};

/// Regularized linear solve failed numerically.
class IllConditioned : public Error {
public:
    explicit IllConditioned(const std::string& msg) : Error(msg) {}
};

}  // namespace bpl

#endif
