#pragma once

#include "quc/common.hpp"

#include <functional>
#include <vector>

namespace quc {

struct GaussRule {
    std::vector<double> nodes;    ///< on [-1, 1]
    std::vector<double> weights;  ///< sum to 2
};

/// n-point Gauss-Legendre rule on [-1, 1] (Newton iteration on P_n).
GaussRule gauss_legendre(int n);

struct QuadratureResult {
    double value = 0;
    double error_estimate = 0;
    int evaluations = 0;
};

/// Adaptive Gauss-Kronrod (7/15) with interval bisection. Throws NumericError on
/// non-finite integrand values; returns the best estimate when the subdivision
/// budget is exhausted (error_estimate then reports the shortfall).
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double abs_tol = 1e-13, double rel_tol = 1e-12,
                                    int max_subdivisions = 2000);

}  // namespace quc
