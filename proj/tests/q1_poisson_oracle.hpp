#pragma once

#include "quc/variational.hpp"

#include <Eigen/SparseLU>

#include <vector>

namespace quc::testing {

// Independent Q1 assembly of J(w) = int |Dw|^2/2 + f w: element stiffness of the
// bilinear square element and trapezoid load.
inline Vector q1_poisson(const ProblemSpec& s) {
    const Eigen::Index np = s.n + 1;
    const Eigen::Index total = np * np;
    const double h = s.spacing();
    const double ke[4][4] = {{4, -1, -2, -1}, {-1, 4, -1, -2}, {-2, -1, 4, -1}, {-1, -2, -1, 4}};
    std::vector<Eigen::Triplet<double>> trip;
    Vector rhs = Vector::Zero(total);
    auto id = [&](Eigen::Index i, Eigen::Index j) { return i + np * j; };
    std::vector<bool> bnd(total);
    Vector g(total);
    for (Eigen::Index j = 0; j < np; ++j)
        for (Eigen::Index i = 0; i < np; ++i) {
            bnd[id(i, j)] = i == 0 || j == 0 || i == s.n || j == s.n;
            Vector x(2);
            x << -s.half_width + i * h, -s.half_width + j * h;
            g(id(i, j)) = s.boundary(x);
            double w = h * h;
            if (i == 0 || i == s.n) w *= 0.5;
            if (j == 0 || j == s.n) w *= 0.5;
            rhs(id(i, j)) = -w * s.source(x);
        }
    for (Eigen::Index j = 0; j < s.n; ++j)
        for (Eigen::Index i = 0; i < s.n; ++i) {
            const Eigen::Index nodes[4] = {id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)};
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) trip.emplace_back(nodes[a], nodes[b], ke[a][b] / 6.0);
        }
    Eigen::SparseMatrix<double> a(total, total);
    a.setFromTriplets(trip.begin(), trip.end());
    // eliminate Dirichlet rows
    Vector b = rhs - a * Vector(g.array() * Eigen::ArrayXd::NullaryExpr(total, [&](Eigen::Index k) { return bnd[k] ? 1.0 : 0.0; }));
    std::vector<Eigen::Triplet<double>> red;
    for (int k = 0; k < a.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it)
            if (!bnd[it.row()] && !bnd[it.col()]) red.emplace_back(it.row(), it.col(), it.value());
    for (Eigen::Index k = 0; k < total; ++k)
        if (bnd[k]) {
            red.emplace_back(k, k, 1.0);
            b(k) = g(k);
        }
    Eigen::SparseMatrix<double> ar(total, total);
    ar.setFromTriplets(red.begin(), red.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(ar);
    return lu.solve(b);
}

}  // namespace quc::testing
