#pragma once

#include <stdexcept>
#include <string>

namespace dendrevo {

/// Construction parameters outside their legal domain (k > n-1, size 0, p < 2, ...).
class InvalidParameters : public std::invalid_argument {
public:
    explicit InvalidParameters(const std::string& what) : std::invalid_argument(what) {}
};

/// Operands that do not fit together (length mismatch, empty dataset, bad file).
class InvalidInput : public std::invalid_argument {
public:
    explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// Statistical test undefined for the given samples.
class DegenerateSample : public std::domain_error {
public:
    explicit DegenerateSample(const std::string& what) : std::domain_error(what) {}
};

} // namespace dendrevo
