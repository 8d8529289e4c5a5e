#include "pbc/monotone.hpp"

#include "pbc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace pbc {

MonotoneMap::MonotoneMap(Vector u_min, Vector u_max, Vector u_star, Vector lambda)
    : u_min_(std::move(u_min)),
      u_max_(std::move(u_max)),
      u_star_(std::move(u_star)),
      lambda_(std::move(lambda)) {
    const int m = static_cast<int>(u_min_.size());
    if (m == 0) throw DimensionError("monotone map: no channels");
    require_size(u_max_, m, "u_max");
    require_size(u_star_, m, "u_star");
    require_size(lambda_, m, "lambda");
    u0_.resize(m);
    for (int i = 0; i < m; ++i) {
        if (!(u_min_(i) < u_star_(i) && u_star_(i) < u_max_(i))) {
            throw InvalidModelError("monotone map: u_star must lie strictly inside (u_min, u_max)");
        }
        if (!(lambda_(i) > 0.0) || !std::isfinite(lambda_(i))) {
            throw InvalidModelError("monotone map: lambda must be positive");
        }
        const double k = (u_max_(i) + u_min_(i) - 2.0 * u_star_(i)) / (u_max_(i) - u_min_(i));
        u0_(i) = lambda_(i) * u_star_(i) + std::atanh(k);
    }
}

MonotoneMap::MonotoneMap(Vector u_min, Vector u_max, Vector u_star, double lambda)
    : MonotoneMap(u_min, u_max, u_star, Vector::Constant(u_min.size(), lambda)) {}

MonotoneMap MonotoneMap::identity(int m) {
    MonotoneMap w;
    w.identity_ = true;
    const double inf = std::numeric_limits<double>::infinity();
    w.u_min_ = Vector::Constant(m, -inf);
    w.u_max_ = Vector::Constant(m, inf);
    w.u_star_ = Vector::Zero(m);
    w.lambda_ = Vector::Ones(m);
    w.u0_ = Vector::Zero(m);
    return w;
}

Vector MonotoneMap::eval(const Vector& s) const {
    require_size(s, size(), "monotone argument");
    if (identity_) return s;
    Vector w(size());
    for (int i = 0; i < size(); ++i) {
        const double a = 0.5 * (u_max_(i) - u_min_(i));
        const double c = 0.5 * (u_max_(i) + u_min_(i));
        double v = a * std::tanh(lambda_(i) * s(i) - u0_(i)) + c;
        if (v >= u_max_(i)) v = std::nextafter(u_max_(i), -INFINITY);
        if (v <= u_min_(i)) v = std::nextafter(u_min_(i), INFINITY);
        w(i) = v;
    }
    return w;
}

Matrix MonotoneMap::derivative(const Vector& s) const {
    require_size(s, size(), "monotone argument");
    if (identity_) return Matrix::Identity(size(), size());
    Matrix d = Matrix::Zero(size(), size());
    for (int i = 0; i < size(); ++i) {
        const double a = 0.5 * (u_max_(i) - u_min_(i));
        const double ch = std::cosh(lambda_(i) * s(i) - u0_(i));
        d(i, i) = a * lambda_(i) / (ch * ch);
    }
    return d;
}

Vector MonotoneMap::inverse(const Vector& w) const {
    require_size(w, size(), "monotone value");
    if (identity_) return w;
    Vector s(size());
    for (int i = 0; i < size(); ++i) {
        if (!(w(i) > u_min_(i) && w(i) < u_max_(i))) {
            throw InvalidModelError("monotone map: value outside the open range");
        }
        const double a = 0.5 * (u_max_(i) - u_min_(i));
        const double c = 0.5 * (u_max_(i) + u_min_(i));
        s(i) = (std::atanh((w(i) - c) / a) + u0_(i)) / lambda_(i);
    }
    return s;
}

namespace {

// log1p(exp(-2|z|)), so that log cosh z = |z| + softplus_tail(z) - log 2.
double softplus_tail(double z) { return std::log1p(std::exp(-2.0 * std::abs(z))); }

// (1/delta) * int_0^delta [tanh(z0 + x) - tanh(z0)] dx, written so that no
// large terms cancel when both ends sit on the same saturated branch.
double mean_tanh_increment(double z0, double delta) {
    const double t = std::tanh(z0);
    if (std::abs(delta) < 1e-3) {
        const double s = 1.0 - t * t;
        const double d2 = -2.0 * t * s;
        const double d3 = s * (6.0 * t * t - 2.0);
        const double d4 = s * t * (16.0 - 24.0 * t * t);
        return delta * (s / 2.0 + delta * (d2 / 6.0 + delta * (d3 / 24.0 + delta * d4 / 120.0)));
    }
    const double z1 = z0 + delta;
    double F = 0.0;
    if (z0 >= 0.0 && z1 >= 0.0) {
        const double q = std::exp(-2.0 * z0);
        F = delta * (2.0 * q / (1.0 + q)) + softplus_tail(z1) - softplus_tail(z0);
    } else if (z0 <= 0.0 && z1 <= 0.0) {
        const double q = std::exp(2.0 * z0);
        F = -delta * (2.0 * q / (1.0 + q)) + softplus_tail(z1) - softplus_tail(z0);
    } else {
        F = std::abs(z1) - std::abs(z0) + softplus_tail(z1) - softplus_tail(z0) - delta * t;
    }
    return F / delta;
}

}  // namespace

Vector MonotoneMap::mean_increment(const Vector& s, const Vector& d) const {
    require_size(s, size(), "monotone argument");
    require_size(d, size(), "monotone increment");
    if (identity_) return 0.5 * d;
    Vector out(size());
    for (int i = 0; i < size(); ++i) {
        const double a = 0.5 * (u_max_(i) - u_min_(i));
        out(i) = a * mean_tanh_increment(lambda_(i) * s(i) - u0_(i), lambda_(i) * d(i));
    }
    return out;
}

double MonotoneMap::eta(const Vector& lo, const Vector& hi) const {
    require_size(lo, size(), "eta lower bound");
    require_size(hi, size(), "eta upper bound");
    if (identity_) return 1.0;
    // The slope peaks at s = u0 / lambda and decays on both sides, so the
    // infimum over an interval sits at one of its ends.
    double best = INFINITY;
    const Matrix dlo = derivative(lo);
    const Matrix dhi = derivative(hi);
    for (int i = 0; i < size(); ++i) best = std::min({best, dlo(i, i), dhi(i, i)});
    return best;
}

MonotoneMap MonotoneMap::recentered(const Vector& u_star) const {
    if (identity_) return *this;
    return MonotoneMap(u_min_, u_max_, u_star, lambda_);
}

}  // namespace pbc
