#include "quc/cantor.hpp"

#include "quc/common.hpp"

#include <cmath>

namespace quc {

namespace {

// h_L on [0, 1]
double h_unit(int level, double t) {
    double scale = 1.0, offset = 0.0;
    for (int d = 0; d < level; ++d) {
        if (t < 1.0 / 3.0) {
            t *= 3.0;
        } else if (t <= 2.0 / 3.0) {
            return offset + 0.5 * scale;
        } else {
            t = 3.0 * t - 2.0;
            offset += 0.5 * scale;
        }
        scale *= 0.5;
    }
    return offset + scale * t;
}

double h_prime_unit(int level, double t) {
    double slope = 1.0;
    for (int d = 0; d < level; ++d) {
        if (t < 1.0 / 3.0) {
            t *= 3.0;
        } else if (t < 2.0 / 3.0) {
            return 0.0;
        } else {
            t = 3.0 * t - 2.0;
        }
        slope *= 1.5;
    }
    return slope;
}

// H_L on [0, 1]; H_L(1) = 1/2 by the symmetry h(1 - t) = 1 - h(t).
double big_h_unit(int level, double t) {
    // Accumulate H(t) = sum of (affine contributions) + scale_area * H_{L-d}(t_d).
    double area = 0.0;       // accumulated integral
    double x_scale = 1.0;    // length of the current subinterval in original units
    double y_scale = 1.0;    // height scale of the current copy
    double y_offset = 0.0;   // value offset of the current copy
    for (int d = 0; d < level; ++d) {
        if (t < 1.0 / 3.0) {
            t *= 3.0;
            x_scale /= 3.0;
            y_scale *= 0.5;
        } else if (t <= 2.0 / 3.0) {
            // left third: integral of the scaled copy over its third, = (x/3)*(y_off + y/2 * 1/2)
            area += (x_scale / 3.0) * (y_offset + 0.5 * y_scale * 0.5);
            area += x_scale * (t - 1.0 / 3.0) * (y_offset + 0.5 * y_scale);
            return area;
        } else {
            area += (x_scale / 3.0) * (y_offset + 0.5 * y_scale * 0.5);
            area += (x_scale / 3.0) * (y_offset + 0.5 * y_scale);
            t = 3.0 * t - 2.0;
            x_scale /= 3.0;
            y_offset += 0.5 * y_scale;
            y_scale *= 0.5;
        }
    }
    // affine base piece: h = y_offset + y_scale * s on s in [0, t]
    area += x_scale * (y_offset * t + 0.5 * y_scale * t * t);
    return area;
}

}  // namespace

CantorProfile::CantorProfile(int level) : level_(level) {
    if (level < 0) throw InputError("CantorProfile: level must be >= 0");
}

double CantorProfile::h(double t) const {
    if (t < 0) return -h(-t);
    const double k = std::floor(t);
    return k + h_unit(level_, t - k);
}

double CantorProfile::h_prime(double t) const {
    if (t < 0) return h_prime(-t);
    const double k = std::floor(t);
    return h_prime_unit(level_, t - k);
}

double CantorProfile::antiderivative(double t) const {
    if (t < 0) return antiderivative(-t);
    const double k = std::floor(t);
    const double s = t - k;
    return 0.5 * k * k + k * s + big_h_unit(level_, s);
}

std::vector<double> CantorProfile::breakpoints() const {
    std::vector<double> pts{0.0, 1.0};
    for (int d = 0; d < level_; ++d) {
        std::vector<double> next;
        next.reserve(pts.size() * 2);
        for (std::size_t i = 0; i + 1 < pts.size(); i += 2) {
            const double a = pts[i], b = pts[i + 1], len = (b - a) / 3.0;
            next.insert(next.end(), {a, a + len, b - len, b});
        }
        pts.swap(next);
    }
    return pts;
}

double cantor_h(int level, double t) {
    if (level < 1) throw InputError("cantor_h: level must be >= 1");
    return CantorProfile(level).h(t);
}

}  // namespace quc
