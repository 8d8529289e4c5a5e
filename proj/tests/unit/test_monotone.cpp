#include "pbc/errors.hpp"
#include "pbc/monotone.hpp"

#include "../support/oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace pbc;
using Catch::Approx;

namespace {
Vector v1(double a) { return Vector::Constant(1, a); }
}  // namespace

TEST_CASE("fixed point at the nominal input", "[monotone]") {
    for (double u_star : {0.1001, 0.27037, 0.5, 0.8999}) {
        for (double lambda : {0.5, 10.0, 300.0}) {
            const MonotoneMap w(v1(0.1), v1(0.9), v1(u_star), lambda);
            CHECK(w.eval(v1(u_star))(0) == Approx(u_star).epsilon(1e-12));
        }
    }
    const MonotoneMap w(v1(0.1), v1(0.9), v1(0.3));
    CHECK(w.lambda()(0) == 10.0);
}

TEST_CASE("range, saturation and monotonicity", "[monotone]") {
    const MonotoneMap w(v1(0.1), v1(0.9), v1(0.27));
    CHECK(w.eval(v1(1e6))(0) < 0.9);
    CHECK(w.eval(v1(-1e6))(0) > 0.1);
    CHECK(w.eval(v1(1e6))(0) == Approx(0.9).epsilon(1e-15));
    CHECK(w.eval(v1(-1e6))(0) == Approx(0.1).epsilon(1e-15));

    std::mt19937 rng(5);
    std::uniform_real_distribution<double> d(-5.0, 5.0);
    for (int k = 0; k < 1000; ++k) {
        double a = d(rng), b = d(rng);
        if (a > b) std::swap(a, b);
        if (a == b) continue;
        const double wa = w.eval(v1(a))(0), wb = w.eval(v1(b))(0);
        CHECK(wa > 0.1);
        CHECK(wb < 0.9);
        CHECK(wb >= wa);
        CHECK(w.derivative(v1(a))(0, 0) >= 0.0);
    }
}

TEST_CASE("derivative matches finite differences", "[monotone]") {
    Vector lo(2), hi(2), us(2), lam(2);
    lo << -2.0 / 3, -2.0 / 3;
    hi << 2.0 / 3, 2.0 / 3;
    us << 0.4, -0.08;
    lam << 10.0, 3.0;
    const MonotoneMap w(lo, hi, us, lam);
    Vector s(2);
    s << 0.35, -0.2;
    const Matrix D = w.derivative(s);
    CHECK(D(0, 1) == 0.0);
    CHECK(D(1, 0) == 0.0);
    for (int i = 0; i < 2; ++i) {
        const double h = 1e-6;
        Vector sp = s, sm = s;
        sp(i) += h;
        sm(i) -= h;
        CHECK(D(i, i) == Approx((w.eval(sp)(i) - w.eval(sm)(i)) / (2 * h)).epsilon(1e-7));
    }
}

TEST_CASE("inverse and eta", "[monotone]") {
    const MonotoneMap w(v1(0.1), v1(0.9), v1(0.6), 4.0);
    for (double s : {-0.3, 0.0, 0.45, 0.9}) {
        CHECK(w.inverse(w.eval(v1(s)))(0) == Approx(s).epsilon(1e-10).margin(1e-12));
    }
    CHECK_THROWS_AS(w.inverse(v1(0.95)), InvalidModelError);
    // the slope is smallest at an end of the interval
    const double eta = w.eta(v1(-1.0), v1(2.0));
    double direct = 1e300;
    for (int k = 0; k <= 3000; ++k) direct = std::min(direct, w.derivative(v1(-1.0 + 3.0 * k / 3000))(0, 0));
    CHECK(eta == Approx(direct).epsilon(1e-12));
    CHECK(eta > 0.0);
}

TEST_CASE("construction checks", "[monotone]") {
    CHECK_THROWS_AS(MonotoneMap(v1(0.1), v1(0.9), v1(0.9)), InvalidModelError);
    CHECK_THROWS_AS(MonotoneMap(v1(0.1), v1(0.9), v1(0.05)), InvalidModelError);
    CHECK_THROWS_AS(MonotoneMap(v1(0.1), v1(0.9), v1(0.5), -1.0), InvalidModelError);
    CHECK_THROWS_AS(MonotoneMap(v1(0.1), Vector::Constant(2, 0.9), v1(0.5)), DimensionError);
}

TEST_CASE("recentred map keeps bounds and slope", "[monotone]") {
    const MonotoneMap w(v1(0.1), v1(0.9), v1(0.27));
    const MonotoneMap r = w.recentered(v1(0.5));
    CHECK(r.u_min() == w.u_min());
    CHECK(r.lambda() == w.lambda());
    CHECK(r.eval(v1(0.5))(0) == Approx(0.5).epsilon(1e-12));
}

TEST_CASE("identity map", "[monotone]") {
    const MonotoneMap id = MonotoneMap::identity(2);
    Vector s(2);
    s << 3.0, -1e9;
    CHECK(id.eval(s) == s);
    CHECK(id.derivative(s) == Matrix::Identity(2, 2));
}

TEST_CASE("closed-form integral oracle agrees with direct summation", "[monotone]") {
    // sanity check of the oracle used by the Lyapunov tests
    const double a = 0.4, lambda = 10.0, u0 = 2.0, k = 1e-4, sbar = 0.27, h = 1500.0;
    const double closed = oracle::tanh_increment_integral(a, lambda, u0, k, sbar, h);
    const int N = 200000;
    double sum = 0.0;
    for (int i = 0; i < N; ++i) {
        const double s = (i + 0.5) * h / N;
        sum += a * (std::tanh(lambda * (k * s + sbar) - u0) - std::tanh(lambda * sbar - u0));
    }
    CHECK(closed == Approx(sum * h / N).epsilon(1e-8));
}

TEST_CASE("mean increment along a segment", "[monotone]") {
    // midpoint-rule reference in long double
    auto reference = [](const MonotoneMap& w, double s, double d) {
        const int N = 200000;
        long double sum = 0.0L;
        const double ws = w.eval(v1(s))(0);
        for (int k = 0; k < N; ++k) sum += w.eval(v1(s + (k + 0.5) / N * d))(0) - ws;
        return static_cast<double>(sum / N);
    };
    const MonotoneMap w(v1(0.1), v1(0.9), v1(0.27), 10.0);
    // near the fixed point, across the transition, deep in either saturation, tiny steps
    for (auto [s, d] : {std::pair{0.27, 0.05}, {0.27, -0.8}, {-0.5, 1.5}, {3.0, 2.0}, {-4.0, -1.0},
                        {0.3, 1e-5}, {0.3, -2e-4}, {2.0, 3e-4}}) {
        INFO("s = " << s << ", d = " << d);
        CHECK(w.mean_increment(v1(s), v1(d))(0) == Approx(reference(w, s, d)).epsilon(1e-7).margin(1e-14));
    }
    CHECK(w.mean_increment(v1(0.4), v1(0.0))(0) == 0.0);
    // deep saturation keeps its tiny but nonzero size instead of cancelling to zero
    const double sat = w.mean_increment(v1(3.0), v1(0.5))(0);
    CHECK(sat > 0.0);
    auto reference_ld = [&](double s0, double d) {
        const int N = 200000;
        const long double z0 = static_cast<long double>(w.lambda()(0)) * s0 - w.u0()(0);
        long double sum = 0.0L;
        for (int k = 0; k < N; ++k) {
            sum += std::tanh(z0 + static_cast<long double>(w.lambda()(0)) * d * (k + 0.5L) / N) - std::tanh(z0);
        }
        return static_cast<double>(0.4L * sum / N);
    };
    CHECK(w.mean_increment(v1(1.5), v1(0.5))(0) == Approx(reference_ld(1.5, 0.5)).epsilon(1e-6));
    CHECK(w.mean_increment(v1(-1.0), v1(-0.5))(0) == Approx(reference_ld(-1.0, -0.5)).epsilon(1e-6));

    const MonotoneMap id = MonotoneMap::identity(1);
    CHECK(id.mean_increment(v1(2.0), v1(3.0))(0) == 1.5);
}
