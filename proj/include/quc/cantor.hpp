#pragma once

// Finite-depth Cantor staircase h_L: equal to the Cantor function on every removed
// middle third of depth <= L, affine across the 2^L surviving intervals of length
// 3^-L. Extended to t >= 0 by h(t) = k + h(t - k).

#include <vector>

namespace quc {

class CantorProfile {
public:
    explicit CantorProfile(int level);

    int level() const { return level_; }

    /// h_L(t) for t >= 0 (t < 0 is mirrored as an odd function).
    double h(double t) const;
    /// One-sided (right) derivative of h_L: (3/2)^L on surviving intervals, 0 on plateaus.
    double h_prime(double t) const;
    /// H_L(t) = int_0^t h_L, closed form per affine piece.
    double antiderivative(double t) const;

    /// Breakpoints of h_L in [0, 1] (endpoints of the affine pieces), ascending.
    std::vector<double> breakpoints() const;

private:
    int level_;
};

/// Cantor function value at finite recursion depth.
double cantor_h(int level, double t);

}  // namespace quc
