#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace quc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Invalid arguments supplied by the caller (bad ranges, unknown names, shapes).
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A documented precondition of an operation does not hold for the given data.
struct PreconditionError : std::logic_error {
    using std::logic_error::logic_error;
};

/// Iterative or quadrature routine failed to produce a finite / converged result.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Evaluation point outside the domain where a formula is defined.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x) {
    return x.allFinite();
}

}  // namespace quc
