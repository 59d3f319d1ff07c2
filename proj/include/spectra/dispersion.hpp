#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "errors.hpp"
#include "greens.hpp"
#include "krein.hpp"
#include "model.hpp"

namespace spectra {

/// Sphere Q entries for junctions on one sphere.  Any type with the same
/// three members can stand in (tests use that to watch which entries are read).
struct SphereEntries {
    SphereParams s;

    double diag(double k) const { return sphere_q_diag(k, s); }
    double quarter(double k) const { return sphere_q_zigzag(k, s); }
    double antipodal(double k) const { return sphere_q_antipodal(k, s); }
};

// Off-diagonal entries with the opposite overall sign, the convention the
// literal carpet polynomials were written in.
struct FlippedEntries {
    SphereParams s;

    double diag(double k) const { return sphere_q_diag(k, s); }
    double quarter(double k) const { return -sphere_q_zigzag(k, s); }
    double antipodal(double k) const { return -sphere_q_antipodal(k, s); }
};

struct CarpetCoeffs {
    double delta = 0.0, a0 = 0.0, a1 = 0.0, b0 = 0.0, b1 = 0.0, c1 = 0.0, c2 = 0.0;
};

struct Quasimomentum {
    double theta1 = 0.0, theta2 = 0.0;
};

/// A + B (cos th1 + cos th2) + C cos th1 cos th2
struct Bilinear {
    double A = 0.0, B = 0.0, C = 0.0;

    double operator()(double c1, double c2) const { return A + B * (c1 + c2) + C * c1 * c2; }
};

struct TorusRange {
    double min = 0.0, max = 0.0;
};

namespace detail {

inline void check_alpha(const ModelParams& p)
{
    if (!(p.alpha > 0.0))
        throw DomainError("coupling alpha must be positive");
}

template <class E>
double chain_entry(double k, const ModelParams& p, const E& e)
{
    return is_zigzag(p.kind) ? e.quarter(k) : e.antipodal(k);
}

// det[[p, r2, r3, r2], [r2, p, r2, r3], [r3, r2, p, r2], [r2, r3, r2, p]] - L(theta)
// with beta e^{+-i theta_1} between junctions 1,3 and beta e^{+-i theta_2} between 2,4.
inline Bilinear carpet_det4(double p, double r2, double r3, double beta)
{
    const double pp = p * p - r3 * r3;
    const double b2 = beta * beta;
    return {
        pp * pp - 4.0 * r2 * r2 * (p - r3) * (p - r3) - 2.0 * b2 * pp + b2 * b2,
        2.0 * beta * (p * p * r3 - 2.0 * p * r2 * r2 + 2.0 * r2 * r2 * r3 - r3 * r3 * r3) - 2.0 * b2 * beta * r3,
        4.0 * b2 * (r3 * r3 - r2 * r2),
    };
}

// Same determinant at cos(theta_i) = c_i in {-1, 1}.  There L is diagonal in the
// basis (e1 +- e3, e2 +- e4), so the value factorizes; the equal-sign corners
// carry a square and touch zero without crossing it.
inline double carpet_det4_corner(double p, double r2, double r3, double beta, double c1, double c2)
{
    const double s = p + r3, d = p - r3;
    return ((s - beta * c1) * (s - beta * c2) - 4.0 * r2 * r2) * (d + beta * c1) * (d + beta * c2);
}

struct Det4Args {
    double p, r2, r3, beta, scale;
};

} // namespace detail

// ---- chains -------------------------------------------------------------

template <class E>
double cos_theta_loose(double k, const ModelParams& p, const E& e)
{
    if (!(p.kind == ModelKind::LooseStraight || p.kind == ModelKind::LooseZigzag))
        throw DomainError("cos_theta_loose: loose chain required");
    detail::check_k(k);
    detail::check_alpha(p);
    const double sn = std::sin(k * p.d);
    guard(sn, "sin(k d)");
    const double P = e.diag(k);
    const double R = detail::chain_entry(k, p, e);
    if (!(std::abs(R) >= guard_threshold))
        throw SingularError("cos_theta_loose: vanishing off-diagonal entry");
    const double al2 = p.alpha * p.alpha;
    const double num = (P * P - R * R) * sn - 2.0 * al2 * k * std::cos(k * p.d) * P - al2 * al2 * k * k * sn;
    return num / (2.0 * al2 * k * R);
}

inline double cos_theta_loose(double k, const ModelParams& p)
{
    return cos_theta_loose(k, p, SphereEntries{{p.a}});
}

template <class E>
double cos_theta_tight(double k, const ModelParams& p, const E& e)
{
    if (!(p.kind == ModelKind::TightStraight || p.kind == ModelKind::TightZigzag))
        throw DomainError("cos_theta_tight: tight chain required");
    detail::check_k(k);
    detail::check_alpha(p);
    const double P = e.diag(k);
    const double R = detail::chain_entry(k, p, e);
    if (!(std::abs(R) >= guard_threshold))
        throw SingularError("cos_theta_tight: vanishing off-diagonal entry");
    const double al2 = p.alpha * p.alpha;
    const double s = p.form == Form::literal ? 1.0 : -1.0;
    return (P * P - R * R + s * al2) / (2.0 * p.alpha * R);
}

inline double cos_theta_tight(double k, const ModelParams& p)
{
    return cos_theta_tight(k, p, SphereEntries{{p.a}});
}

inline double cos_theta(double k, const ModelParams& p)
{
    return is_loose(p.kind) ? cos_theta_loose(k, p) : cos_theta_tight(k, p);
}

// ---- carpets ------------------------------------------------------------

template <class E>
CarpetCoeffs carpet_coeffs(double k, const ModelParams& p, const E& e)
{
    if (p.kind != ModelKind::LooseCarpet)
        throw DomainError("carpet_coeffs: loose carpet required");
    detail::check_k(k);
    const double sn = std::sin(k * p.d), cs = std::cos(k * p.d);
    guard(sn, "sin(k d)");
    const double P = e.diag(k), R2 = e.quarter(k), R3 = e.antipodal(k);
    const double al = p.alpha, al2 = al * al;
    const double k2 = k * k, ks = k * sn;
    const std::array<double, 3> q = {P, R2, R3}; // q[j] = Q^{1,j+1}

    CarpetCoeffs c;
    c.delta = (R2 * R2 - P * P) / k2 + 2.0 * al2 / ks * (P * cs + R2) + al2 * al2;
    for (int j = 0; j <= 1; ++j) {
        const double sg = j == 0 ? 1.0 : -1.0;
        const double v = q[j] * c.delta + (q[j] / k2 - sg * al2 / ks) * (R2 * R2 + R3 * R3) +
                         2.0 * R2 * R3 * (q[1 - j] / k2 + sg * al2 / ks);
        (j == 0 ? c.a0 : c.a1) = v;
    }
    const double pr = (P * P - R2 * R2) / ks;
    c.b0 = (pr * cs + al2 * P) / (k2 * sn * sn) - c.delta * cs / ks;
    c.b1 = (pr - al2 * P) / (k2 * sn * sn);
    for (int j = 1; j <= 2; ++j) {
        const double far = q[3 - j], near = q[j];
        const double v = al / ks * (al2 * far + far * P * cs / ks - (near * P + far * R2 * cs) / ks);
        (j == 1 ? c.c1 : c.c2) = v;
    }
    return c;
}

inline CarpetCoeffs carpet_coeffs(double k, const ModelParams& p)
{
    return carpet_coeffs(k, p, FlippedEntries{{p.a}});
}

/// Loose-carpet polynomial built from carpet_coeffs, bracket closed as
/// (a0 b1 + a1 b0 - c1 c2) c2.
inline double carpet_literal_loose(const CarpetCoeffs& c, double alpha, Quasimomentum q)
{
    const double C1 = std::cos(q.theta1), C2 = std::cos(q.theta2);
    const double D = c.delta, al = alpha;
    const double c11 = c.c1 * c.c1, c22 = c.c2 * c.c2;
    double v = (c.a0 * c.a0 - c.a1 * c.a1) * (c.b0 * c.b0 - c.b1 * c.b1) + (c11 - c22) * (c11 - c22) -
               2.0 * ((c.c1 + c.c2) * (c.c1 + c.c2) * (c.a0 * c.b0 + c.a1 * c.b1) -
                      2.0 * c.c1 * c.c2 * (c.a0 + c.a1) * (c.b0 + c.b1));
    v += 2.0 * al * D *
         ((c.a0 * c.b0 + c.a1 * c.b1 - c11) * c.c1 + (c.a0 * c.b1 + c.a1 * c.b0 - c.c1 * c.c2) * c.c2) * (C1 + C2);
    v += 2.0 * al * al * D * D *
         ((c11 - c22) * std::cos(q.theta1 + q.theta2) + (c11 - c.a1 * c.b1) * std::cos(q.theta1 - q.theta2) + c11 -
          c.a0 * c.b0);
    v += -2.0 * al * al * al * D * D * D * c.c1 * (C1 + C2) + std::pow(al * D, 4);
    return v;
}

/// Bilinear coefficients of the tight carpet condition.
template <class E>
Bilinear tight_carpet_bilinear(double k, const ModelParams& p, const E& e)
{
    if (p.kind != ModelKind::TightCarpet)
        throw DomainError("tight carpet required");
    detail::check_k(k);
    const double P = e.diag(k), R2 = e.quarter(k), R3 = e.antipodal(k);
    const double al = p.alpha;
    if (p.form == Form::determinant)
        return detail::carpet_det4(P, R2, R3, al);
    const double pp = P * P - R3 * R3;
    return {
        pp * pp - 4.0 * R2 * R2 * (P - R3) * (P - R3) + std::pow(al, 4),
        2.0 * al * (R3 * R3 * R3 - P * P * R3 + 2.0 * P * R2 * R2 - 2.0 * R2 * R2 * R3) - 2.0 * al * al * al * R3,
        2.0 * al * al * (R3 * R3 - P * P + 2.0 * (R3 * R3 - R2 * R2)),
    };
}

inline Bilinear tight_carpet_bilinear(double k, const ModelParams& p)
{
    if (p.form == Form::literal)
        return tight_carpet_bilinear(k, p, FlippedEntries{{p.a}});
    return tight_carpet_bilinear(k, p, SphereEntries{{p.a}});
}

/// Loose carpet in determinant form.  Eliminating the segments leaves the
/// tight form with diagonal p + alpha^2 k^2 Q1_11 and coupling alpha^2 k^2 Q1_12.
/// Everything is multiplied by sin(kd) so the result stays finite at the
/// segment poles: the value is det(Q - L) of the 8x8 cell times sin^4(kd).
template <class E>
detail::Det4Args loose_carpet_args(double k, const ModelParams& p, const E& e)
{
    if (p.kind != ModelKind::LooseCarpet)
        throw DomainError("loose carpet required");
    detail::check_k(k);
    const double sn = std::sin(k * p.d), cs = std::cos(k * p.d);
    const double al2 = p.alpha * p.alpha;
    return {e.diag(k) * sn - al2 * k * cs, e.quarter(k) * sn, e.antipodal(k) * sn, -al2 * k, 1.0 / (k * k * k * k)};
}

template <class E>
Bilinear loose_carpet_bilinear(double k, const ModelParams& p, const E& e)
{
    const auto a = loose_carpet_args(k, p, e);
    const Bilinear b = detail::carpet_det4(a.p, a.r2, a.r3, a.beta);
    return {b.A * a.scale, b.B * a.scale, b.C * a.scale};
}

inline double carpet_condition_tight(double k, Quasimomentum q, const ModelParams& p)
{
    return tight_carpet_bilinear(k, p)(std::cos(q.theta1), std::cos(q.theta2));
}

inline double carpet_condition_loose(double k, Quasimomentum q, const ModelParams& p)
{
    if (p.form == Form::literal)
        return carpet_literal_loose(carpet_coeffs(k, p), p.alpha, q);
    return loose_carpet_bilinear(k, p, SphereEntries{{p.a}})(std::cos(q.theta1), std::cos(q.theta2));
}

inline double carpet_condition(double k, Quasimomentum q, const ModelParams& p)
{
    return p.kind == ModelKind::LooseCarpet ? carpet_condition_loose(k, q, p) : carpet_condition_tight(k, q, p);
}

namespace detail {

inline TorusRange corners(const Bilinear& b)
{
    const std::array<double, 3> v = {b(1.0, 1.0), b(-1.0, -1.0), b(1.0, -1.0)};
    return {*std::min_element(v.begin(), v.end()), *std::max_element(v.begin(), v.end())};
}

inline TorusRange corners(const Det4Args& a)
{
    const std::array<double, 3> v = {
        carpet_det4_corner(a.p, a.r2, a.r3, a.beta, 1.0, 1.0) * a.scale,
        carpet_det4_corner(a.p, a.r2, a.r3, a.beta, -1.0, -1.0) * a.scale,
        carpet_det4_corner(a.p, a.r2, a.r3, a.beta, 1.0, -1.0) * a.scale,
    };
    return {*std::min_element(v.begin(), v.end()), *std::max_element(v.begin(), v.end())};
}

// golden-section search for the minimum of f on [lo, hi]
template <class F>
double golden_min(F&& f, double lo, double hi, double& fx)
{
    constexpr double g = 0.6180339887498949;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    if (f1 < f2) {
        fx = f1;
        return x1;
    }
    fx = f2;
    return x2;
}

// minimum of f over the torus: grid, then coordinate descent around the best node
template <class F>
double torus_min(F&& f, int grid)
{
    const double h = 2.0 * pi / grid;
    double best = std::numeric_limits<double>::infinity();
    int bi = 0, bj = 0;
    for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j) {
            const double v = f(i * h, j * h);
            if (v < best) {
                best = v;
                bi = i;
                bj = j;
            }
        }
    double t1 = bi * h, t2 = bj * h;
    for (int sweep = 0; sweep < 100; ++sweep) {
        const double before = best;
        double v1 = 0.0, v2 = 0.0;
        const double n1 = golden_min([&](double x) { return f(x, t2); }, t1 - h, t1 + h, v1);
        if (v1 < best) {
            best = v1;
            t1 = n1;
        }
        const double n2 = golden_min([&](double x) { return f(t1, x); }, t2 - h, t2 + h, v2);
        if (v2 < best) {
            best = v2;
            t2 = n2;
        }
        if (before - best <= 1e-9 * std::max(1.0, std::abs(best)))
            break;
    }
    return best;
}

} // namespace detail

inline constexpr int torus_grid_default = 64;

/// Range of the carpet condition over the quasimomentum torus.
inline TorusRange torus_range(double k, const ModelParams& p, int grid = torus_grid_default)
{
    if (!is_carpet(p.kind))
        throw DomainError("torus_range: carpet model required");
    const SphereEntries e{{p.a}};
    if (p.kind == ModelKind::TightCarpet) {
        if (p.form == Form::literal)
            return detail::corners(tight_carpet_bilinear(k, p));
        detail::check_k(k);
        return detail::corners(detail::Det4Args{e.diag(k), e.quarter(k), e.antipodal(k), p.alpha, 1.0});
    }
    if (p.form == Form::determinant)
        return detail::corners(loose_carpet_args(k, p, e));
    const CarpetCoeffs c = carpet_coeffs(k, p);
    auto f = [&](double a, double b) { return carpet_literal_loose(c, p.alpha, {a, b}); };
    const double lo = detail::torus_min(f, grid);
    const double hi = -detail::torus_min([&](double a, double b) { return -f(a, b); }, grid);
    return {lo, std::max(lo, hi)};
}

} // namespace spectra
