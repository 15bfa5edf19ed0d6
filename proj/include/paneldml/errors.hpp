#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace paneldml {

/// Invalid configuration (bad DGP parameters, fold counts, ...).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Mismatched vector/matrix dimensions.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Rank-deficient regression design. Carries the names of the columns the
/// pivoted decomposition flagged as linearly dependent.
struct SingularDesignError : std::runtime_error {
    SingularDesignError(const std::string& msg, std::vector<std::string> cols)
        : std::runtime_error(msg), columns(std::move(cols)) {}
    std::vector<std::string> columns;
};

/// A replication-level estimation failure (degenerate fold, empty training set, ...).
struct EstimationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace paneldml
