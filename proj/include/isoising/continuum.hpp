#ifndef ISOISING_CONTINUUM_HPP
#define ISOISING_CONTINUUM_HPP

#include <functional>

#include "isoising/base.hpp"

namespace isoising {

/// Crossing probability of the half-plane quadrilateral (H; 0, 1-u, 1, inf).
inline double crossing_formula(double u) {
    if (u < 0.0 || u > 1.0) fail(ErrorKind::OutOfRange, "crossing_formula: u outside [0,1]");
    double s1 = std::sqrt(1.0 - std::sqrt(1.0 - u));
    double s2 = std::sqrt(1.0 - std::sqrt(u));
    return s1 / (s2 + s1);
}

/// Harmonic function of the 4-point problem in the upper half-plane:
/// boundary values 0 on (0, 1-u), 1 on (1-u, 1) and u on the outer rays.
inline double fourpoint_H(cplx z, double u) {
    if (u < 0.0 || u > 1.0) fail(ErrorKind::OutOfRange, "fourpoint_H: u outside [0,1]");
    return u + (-std::arg(z - (1.0 - u)) + u * std::arg(z) + (1.0 - u) * std::arg(z - 1.0)) / kPi;
}

/// Complete elliptic integral of the first kind, modulus k, via the AGM.
inline double elliptic_K(double k) {
    if (k < 0.0 || k >= 1.0) fail(ErrorKind::OutOfRange, "elliptic_K: modulus outside [0,1)");
    double a = 1.0, b = std::sqrt(1.0 - k * k);
    for (int i = 0; i < 64 && std::abs(a - b) > 1e-16 * a; ++i) {
        double an = 0.5 * (a + b);
        b = std::sqrt(a * b);
        a = an;
    }
    return kPi / (2.0 * a);
}

/// Aspect ratio of the conformal rectangle of (H; 0, 1-u, 1, inf): the arcs
/// (b c) and (d a) map to the vertical sides, rho = K(sqrt(1-u))/K(sqrt(u)).
inline double u_to_modulus(double u) {
    if (u <= 0.0 || u >= 1.0) fail(ErrorKind::DegenerateQuad, "u_to_modulus: u must be in (0,1)");
    return elliptic_K(std::sqrt(1.0 - u)) / elliptic_K(std::sqrt(u));
}

/// Inverse of u_to_modulus by bisection (the ratio is strictly decreasing).
inline double modulus_to_u(double rho) {
    if (!(rho > 0.0) || !std::isfinite(rho))
        fail(ErrorKind::DegenerateQuad, "modulus_to_u: invalid aspect ratio");
    double lo = 1e-12, hi = 1.0 - 1e-12;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (u_to_modulus(mid) > rho)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

namespace detail {

inline double sinh_ratio(double a, double b) {
    // sinh(a)/sinh(b) for 0 <= a <= b without overflow
    return std::exp(a - b) * (1.0 - std::exp(-2.0 * a)) / (1.0 - std::exp(-2.0 * b));
}

inline double cosh_over_sinh(double a, double b) {
    // cosh(a)/sinh(b)
    return std::exp(a - b) * (1.0 + std::exp(-2.0 * a)) / (1.0 - std::exp(-2.0 * b));
}

}  // namespace detail

/// Continuous FK reference on the unit square with a at the midpoint of the
/// left side and b at the midpoint of the right side.  h is the harmonic
/// measure of the wired arc (through the top); f^2 = 2 i dh.
class SquareFkReference {
  public:
    explicit SquareFkReference(int terms = 400) : terms_(terms) {}

    double h(cplx z) const {
        double x = std::real(z), y = std::imag(z);
        double acc = 0.0;
        for (int k = 1; k <= terms_; ++k) {
            double kp = k * kPi;
            double ck = 2.0 * (1.0 - (k % 2 == 0 ? 1.0 : -1.0)) / kp;
            double dk = 2.0 * (std::cos(kp / 2) - std::cos(kp)) / kp;
            acc += ck * std::sin(kp * x) * detail::sinh_ratio(kp * y, kp);
            acc += dk * std::sin(kp * y) *
                   (detail::sinh_ratio(kp * x, kp) + detail::sinh_ratio(kp * (1.0 - x), kp));
        }
        return acc;
    }

    /// Complex derivative d h = (h_x - i h_y)/2.
    cplx dh(cplx z) const {
        double x = std::real(z), y = std::imag(z);
        double hx = 0.0, hy = 0.0;
        for (int k = 1; k <= terms_; ++k) {
            double kp = k * kPi;
            double ck = 2.0 * (1.0 - (k % 2 == 0 ? 1.0 : -1.0)) / kp;
            double dk = 2.0 * (std::cos(kp / 2) - std::cos(kp)) / kp;
            hx += ck * kp * std::cos(kp * x) * detail::sinh_ratio(kp * y, kp);
            hy += ck * kp * std::sin(kp * x) * detail::cosh_over_sinh(kp * y, kp);
            hy += dk * kp * std::cos(kp * y) *
                  (detail::sinh_ratio(kp * x, kp) + detail::sinh_ratio(kp * (1.0 - x), kp));
            hx += dk * kp * std::sin(kp * y) *
                  (detail::cosh_over_sinh(kp * x, kp) - detail::cosh_over_sinh(kp * (1.0 - x), kp));
        }
        return 0.5 * cplx(hx, -hy);
    }

    cplx f_squared(cplx z) const { return cplx(0, 2) * dh(z); }

  private:
    int terms_;
};

/// Continuous spin reference on the rectangle (-1,1) x (0,1): the Poisson
/// kernel with mass at the top center, normalized so d/dy h = 1 at the
/// bottom center; f^2 = 2 i dh with f(0) = 1.
class RectSpinReference {
  public:
    explicit RectSpinReference(int terms = 600) : terms_(terms) {
        double s = 0.0;
        for (int k = 1; k <= terms_; ++k) {
            double kh = k * kPi / 2;
            double s2 = std::sin(kh);
            s += 0.25 * s2 * s2 * kh * 2.0 * std::exp(-kh) / (1.0 - std::exp(-2.0 * kh));
        }
        scale_ = 1.0 / s;
    }

    double h(cplx z) const {
        double x = std::real(z), y = std::imag(z);
        double acc = 0.0;
        for (int k = 1; k <= terms_; ++k) {
            double kh = k * kPi / 2;
            double s2 = std::sin(kh);
            if (s2 == 0.0) continue;
            acc += 0.25 * s2 * std::sin(kh * (x + 1.0)) * detail::sinh_ratio(kh * y, kh);
        }
        return scale_ * acc;
    }

    cplx dh(cplx z) const {
        double x = std::real(z), y = std::imag(z);
        double hx = 0.0, hy = 0.0;
        for (int k = 1; k <= terms_; ++k) {
            double kh = k * kPi / 2;
            double s2 = std::sin(kh);
            if (s2 == 0.0) continue;
            hx += 0.25 * s2 * kh * std::cos(kh * (x + 1.0)) * detail::sinh_ratio(kh * y, kh);
            hy += 0.25 * s2 * kh * std::sin(kh * (x + 1.0)) * detail::cosh_over_sinh(kh * y, kh);
        }
        return 0.5 * scale_ * cplx(hx, -hy);
    }

    cplx f_squared(cplx z) const { return cplx(0, 2) * dh(z); }

  private:
    int terms_;
    double scale_ = 1.0;
};

/// Half-plane spin reference with mass at infinity: h = Im z, f = 1.
struct HalfPlaneSpinReference {
    double h(cplx z) const { return std::imag(z); }
    cplx f(cplx z) const {
        (void)z;
        return {1.0, 0.0};
    }
};

/// Assigns square roots of fsq continuously: points are processed in the
/// given order and each sign is matched to the nearest already-assigned
/// point, with the first sign chosen so Re f(first) >= 0.
inline std::vector<cplx> continuous_sqrt(const std::vector<cplx>& points,
                                         const std::vector<cplx>& fsq) {
    std::vector<cplx> out(points.size());
    std::vector<std::size_t> done;
    for (std::size_t i = 0; i < points.size(); ++i) {
        cplx root = std::sqrt(fsq[i]);
        if (done.empty()) {
            if (std::real(root) < 0) root = -root;
        } else {
            double best = 1e300;
            cplx ref;
            for (std::size_t j : done) {
                double d = std::abs(points[j] - points[i]);
                if (d < best) {
                    best = d;
                    ref = out[j];
                }
            }
            if (std::abs(root - ref) > std::abs(root + ref)) root = -root;
        }
        out[i] = root;
        done.push_back(i);
    }
    return out;
}

/// Moebius map of the unit disc onto the upper half-plane sending -1 to
/// infinity and +1 to 0 (used by the conformal-covariance self-checks).
inline cplx disc_to_halfplane(cplx w) { return cplx(0, 1) * (1.0 - w) / (1.0 + w); }
inline cplx disc_to_halfplane_deriv(cplx w) {
    cplx d = 1.0 + w;
    return cplx(0, -2) / (d * d);
}

}  // namespace isoising

#endif
