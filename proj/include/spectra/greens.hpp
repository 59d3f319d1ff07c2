#pragma once

#include <cmath>

#include "errors.hpp"
#include "specfun.hpp"

// Sign convention: G(x, y; k^2) is the kernel of (-Laplacian - k^2)^{-1}.
// With it the renormalized diagonal G(rho) + ln(rho)/(2 pi) has a finite limit
// equal to sphere_q_diag, and the Neumann segment kernel tends to -1/(d k^2)
// as k -> 0 (the constant mode).  Both are checked against eigenfunction
// expansions in the tests.

namespace spectra {

struct SphereParams {
    double a = 1.0;
};

struct SegmentParams {
    double d = 1.0;
};

struct QBlock {
    double q11 = 0.0, q12 = 0.0, q21 = 0.0, q22 = 0.0;

    double det() const { return q11 * q22 - q12 * q21; }
};

namespace detail {

inline void check_k(double k)
{
    if (!(k > 0.0))
        throw DomainError("momentum must be positive");
}

inline double sphere_cos(double t) { return std::cos(pi * t); }
inline double zigzag_cos(double t) { return std::cos(pi * (0.25 + 0.5 * t)); }

} // namespace detail

/// Free resolvent kernel on the sphere at geodesic distance rho.
inline double sphere_green(double rho, double k, SphereParams s)
{
    detail::check_k(k);
    if (!(rho > 0.0 && rho <= pi * s.a))
        throw DomainError("sphere_green: rho must lie in (0, pi a]");
    const double t = SpectralParam::from_k(k, s.a).t;
    const double c = detail::sphere_cos(t);
    guard(c, "cos(pi t)");
    return legendre_p(t, -std::cos(rho / s.a)) / (4.0 * c);
}

/// Renormalized diagonal: lim G(rho) + ln(rho)/(2 pi).
inline double sphere_q_diag(double k, SphereParams s)
{
    detail::check_k(k);
    const double t = SpectralParam::from_k(k, s.a).t;
    const double c = detail::sphere_cos(t);
    guard(c, "cos(pi t)");
    const double tn = std::sin(pi * t) / c;
    return -(digamma(0.5 + t) - 0.5 * pi * tn - std::log(2.0 * s.a) + euler_gamma) / (2.0 * pi);
}

/// Kernel between points a quarter great circle apart.
inline double sphere_q_zigzag(double k, SphereParams s)
{
    detail::check_k(k);
    const double t = SpectralParam::from_k(k, s.a).t;
    const double c = detail::zigzag_cos(t);
    guard(c, "cos(pi (1/4 + t/2))");
    return gamma_quarter_ratio(t) / (8.0 * std::sqrt(pi) * c);
}

/// Kernel between antipodal points.
inline double sphere_q_antipodal(double k, SphereParams s)
{
    detail::check_k(k);
    const double t = SpectralParam::from_k(k, s.a).t;
    const double c = detail::sphere_cos(t);
    guard(c, "cos(pi t)");
    return 1.0 / (4.0 * c);
}

/// Neumann kernel on [0, d].
inline double segment_green(double x, double x2, double k, SegmentParams g)
{
    detail::check_k(k);
    if (!(x >= 0.0 && x <= g.d && x2 >= 0.0 && x2 <= g.d))
        throw DomainError("segment_green: positions must lie in [0, d]");
    const double sn = std::sin(k * g.d);
    guard(sn, "sin(k d)");
    return -(std::cos(k * (g.d - std::abs(x - x2))) + std::cos(k * (g.d - (x + x2)))) / (2.0 * k * sn);
}

/// Segment kernel at its endpoints.
inline QBlock segment_q(double k, SegmentParams g)
{
    detail::check_k(k);
    const double sn = std::sin(k * g.d);
    guard(sn, "sin(k d)");
    const double diag = -std::cos(k * g.d) / (k * sn);
    const double off = -1.0 / (k * sn);
    return {diag, off, off, diag};
}

} // namespace spectra
