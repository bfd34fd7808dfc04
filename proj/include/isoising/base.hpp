#ifndef ISOISING_BASE_HPP
#define ISOISING_BASE_HPP

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace isoising {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kGeomTol = 1e-12;

enum class ErrorKind {
    AngleBoundViolation,
    NotSimplyConnected,
    BadMarkedPoint,
    ArcMismatch,
    MissingNeighbor,
    MissingFace,
    MissingVertex,
    NotHolomorphic,
    NonClosedForm,
    ZeroDirection,
    NotSHolomorphic,
    InconsistentIncrements,
    BadAngles,
    TooLarge,
    TraceError,
    RankDeficient,
    SingularSystem,
    NonConvergent,
    OutOfRange,
    DegenerateQuad,
    NotAlternatingQuad,
    InsufficientSamples,
    EvaluationOutsideDomain,
    ManifestError,
    BadInput,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

  private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

/// Orthogonal projection of x onto the line spanned by dir.
inline cplx project(cplx x, cplx dir) {
    double n = std::abs(dir);
    if (n == 0.0) fail(ErrorKind::ZeroDirection, "project: zero direction");
    cplx u = dir / n;
    return std::real(x * std::conj(u)) * u;
}

/// Signed amplitude of x along the unit direction u: x = amp(x,u)*u + orthogonal part.
inline double proj_amp(cplx x, cplx u) { return std::real(x * std::conj(u)); }

/// Branch of w^{-1/2} with argument in (-pi/2, pi/2].  Both signs span the same
/// line; every formula downstream is invariant under the global sign flip.
inline cplx inv_sqrt_dir(cplx w) {
    if (w == cplx(0.0, 0.0)) fail(ErrorKind::ZeroDirection, "inv_sqrt_dir: zero vector");
    cplx r = 1.0 / std::sqrt(w);
    double a = std::arg(r);
    if (a <= -kPi / 2 || a > kPi / 2) r = -r;
    return r;
}

/// Square-root with branch argument in (-pi/2, pi/2].
inline cplx sqrt_dir(cplx w) {
    if (w == cplx(0.0, 0.0)) return {0.0, 0.0};
    cplx r = std::sqrt(w);
    double a = std::arg(r);
    if (a <= -kPi / 2 || a > kPi / 2) r = -r;
    return r;
}

/// Signed angle of the rotation taking a to b, in (-pi, pi].
inline double turn_angle(cplx a, cplx b) { return std::arg(b / a); }

inline bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

inline bool near_rel(double a, double b, double rtol) {
    double s = std::max(std::abs(a), std::abs(b));
    return std::abs(a - b) <= rtol * std::max(1.0, s);
}

}  // namespace isoising

#endif
