#pragma once

// Saturating, strongly monotone map applied channel-wise:
//     w(s) = (u_max - u_min)/2 tanh(lambda s - u0) + (u_max + u_min)/2
// with u0 chosen so that w(u_star) = u_star.

#include "pbc/linalg.hpp"

namespace pbc {

class MonotoneMap {
public:
    static constexpr double kDefaultLambda = 10.0;

    /// Throws InvalidModelError unless u_min < u_star < u_max and lambda > 0
    /// on every channel.
    MonotoneMap(Vector u_min, Vector u_max, Vector u_star, Vector lambda);
    MonotoneMap(Vector u_min, Vector u_max, Vector u_star, double lambda = kDefaultLambda);

    /// w(s) = s. Used to check that the monotone controller collapses onto the
    /// plain one.
    static MonotoneMap identity(int m);

    [[nodiscard]] int size() const noexcept { return static_cast<int>(u_min_.size()); }
    [[nodiscard]] bool is_identity() const noexcept { return identity_; }
    [[nodiscard]] const Vector& u_min() const noexcept { return u_min_; }
    [[nodiscard]] const Vector& u_max() const noexcept { return u_max_; }
    [[nodiscard]] const Vector& u_star() const noexcept { return u_star_; }
    [[nodiscard]] const Vector& lambda() const noexcept { return lambda_; }
    [[nodiscard]] const Vector& u0() const noexcept { return u0_; }

    /// Strictly inside (u_min, u_max) on every channel, even where tanh rounds to +-1.
    [[nodiscard]] Vector eval(const Vector& s) const;

    /// Diagonal Jacobian dw/ds.
    [[nodiscard]] Matrix derivative(const Vector& s) const;

    /// Inverse on the open range. Throws InvalidModelError outside it.
    [[nodiscard]] Vector inverse(const Vector& w) const;

    /// Smallest slope over the box [lo, hi] (all channels).
    [[nodiscard]] double eta(const Vector& lo, const Vector& hi) const;

    /// Per channel, the mean of w(s + t d) - w(s) over t in [0, 1].
    [[nodiscard]] Vector mean_increment(const Vector& s, const Vector& d) const;

    /// Same bounds and steepness, new fixed point.
    [[nodiscard]] MonotoneMap recentered(const Vector& u_star) const;

private:
    MonotoneMap() = default;

    bool identity_ = false;
    Vector u_min_;
    Vector u_max_;
    Vector u_star_;
    Vector lambda_;
    Vector u0_;
};

}  // namespace pbc
