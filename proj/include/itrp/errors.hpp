#ifndef ITRP_ERRORS_HPP
#define ITRP_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace itrp {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Syntax error while parsing an expression. `position` is the 0-based
// character index into the source string.
struct ParseError : Error {
    ParseError(const std::string& msg, std::size_t pos) : Error(msg), position(pos) {}
    std::size_t position = 0;
};

struct UnknownSymbolError : ParseError {
    UnknownSymbolError(const std::string& name, std::size_t pos)
        : ParseError("unknown symbol '" + name + "' at position " + std::to_string(pos), pos),
          symbol(name) {}
    std::string symbol;
};

// Invalid argument during numeric evaluation (log of non-positive value,
// division by zero, ...).
struct DomainError : Error {
    explicit DomainError(const std::string& msg) : Error(msg) {}
};

// Model or data file violates the documented schema.
struct SchemaError : Error {
    explicit SchemaError(const std::string& msg) : Error(msg) {}
};

// ODE integration could not be completed at the given parameter point.
// The optimizer treats this as an infeasible trial point.
struct IntegrationError : Error {
    IntegrationError(const std::string& msg, std::vector<double> theta_est)
        : Error(msg), theta(std::move(theta_est)) {}
    std::vector<double> theta;
};

// Every start of a (multi-start) optimization failed.
struct OptimizationError : Error {
    explicit OptimizationError(const std::string& msg) : Error(msg) {}
};

}  // namespace itrp

#endif
