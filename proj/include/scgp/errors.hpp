#pragma once

#include <stdexcept>
#include <string>

namespace scgp {

// Invalid or inconsistent configuration (bad JSON, missing fields, parameters
// outside their domain). CLI maps this to exit code 3.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure (Cholesky breakdown after jitter escalation, non-finite
// objective). CLI maps this to exit code 4.
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace scgp
