#include "quc/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>

namespace quc {

GaussRule gauss_legendre(int n) {
    if (n < 1) throw InputError("gauss_legendre: n must be >= 1");
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = pk;
        }
        dp = (n == 1) ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

namespace {

constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                            0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a, b, value, error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

Segment kronrod15(const std::function<double(double)>& f, double a, double b, int& evals) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    const double fc = f(c);
    double resk = fc * kWgk[7];
    double resg = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kXgk[j];
        const double f1 = f(c - dx), f2 = f(c + dx);
        resk += kWgk[j] * (f1 + f2);
        if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
    }
    evals += 15;
    Segment s{a, b, resk * h, std::abs((resk - resg) * h)};
    if (!std::isfinite(s.value)) throw NumericError("integrate_adaptive: non-finite integrand value");
    return s;
}

}  // namespace

QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double abs_tol, double rel_tol, int max_subdivisions) {
    QuadratureResult out;
    if (a == b) return out;
    std::priority_queue<Segment> heap;
    Segment first = kronrod15(f, a, b, out.evaluations);
    double total = first.value, err = first.error;
    heap.push(first);
    int splits = 0;
    while (err > std::max(abs_tol, rel_tol * std::abs(total)) && splits < max_subdivisions) {
        Segment worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            // interval cannot be split further in floating point
            heap.push(Segment{worst.a, worst.b, worst.value, 0.0});
            err -= worst.error;
            continue;
        }
        Segment l = kronrod15(f, worst.a, mid, out.evaluations);
        Segment r = kronrod15(f, mid, worst.b, out.evaluations);
        total += l.value + r.value - worst.value;
        err += l.error + r.error - worst.error;
        heap.push(l);
        heap.push(r);
        ++splits;
    }
    // re-sum to limit cancellation drift from the running updates
    double sum = 0, esum = 0;
    while (!heap.empty()) {
        sum += heap.top().value;
        esum += heap.top().error;
        heap.pop();
    }
    out.value = sum;
    out.error_estimate = esum;
    return out;
}

}  // namespace quc
