#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>

#include "errors.hpp"

namespace spectra {

inline constexpr double euler_gamma = std::numbers::egamma;
inline constexpr double pi = std::numbers::pi;

/// Degree parameter t = sqrt(1 + 4 a^2 k^2) / 2 of the sphere resolvent.
struct SpectralParam {
    double k;
    double z;
    double t;

    static SpectralParam from_k(double k, double a)
    {
        return {k, k * k, 0.5 * std::sqrt(1.0 + 4.0 * a * a * k * k)};
    }
};

/// psi(x) for x > 0. Upward recurrence to x >= 8, then the asymptotic series.
inline double digamma(double x)
{
    if (!(x > 0.0))
        throw DomainError("digamma: x must be positive");
    double shift = 0.0;
    while (x < 8.0) {
        shift -= 1.0 / x;
        x += 1.0;
    }
    // B_2k / (2k) for k = 1..7
    static constexpr std::array<double, 7> c = {
        1.0 / 12.0,
        -1.0 / 120.0,
        1.0 / 252.0,
        -1.0 / 240.0,
        1.0 / 132.0,
        -691.0 / 32760.0,
        1.0 / 12.0,
    };
    const double r2 = 1.0 / (x * x);
    double s = 0.0;
    for (std::size_t i = c.size(); i-- > 0;)
        s = (s + c[i]) * r2;
    return shift + std::log(x) - 0.5 / x - s;
}

/// ln Gamma(x) for x > 0 (Lanczos, g = 671/128, 14 terms).
inline double log_gamma(double x)
{
    if (!(x > 0.0))
        throw DomainError("log_gamma: x must be positive");
    static constexpr std::array<double, 14> cof = {
        57.1562356658629235,     -59.5979603554754912,
        14.1360979747417471,     -0.491913816097620199,
        .339946499848118887e-4,  .465236289270485756e-4,
        -.983744753048795646e-4, .158088703224912494e-3,
        -.210264441724104883e-3, .217439618115212643e-3,
        -.164318106536763890e-3, .844182239838527433e-4,
        -.261908384015814087e-4, .368991826595316234e-5,
    };
    if (x == 1.0 || x == 2.0)
        return 0.0;
    if (x < 0.5) // keep the series argument away from zero
        return log_gamma(x + 1.0) - std::log(x);
    double y = x;
    double tmp = x + 5.24218750000000000;
    tmp = (x + 0.5) * std::log(tmp) - tmp;
    double ser = 0.999999999999997092;
    for (double cj : cof)
        ser += cj / ++y;
    return tmp + std::log(2.5066282746310005 * ser / x);
}

/// Gamma(1/4 + t/2) / Gamma(3/4 + t/2).
inline double gamma_quarter_ratio(double t)
{
    if (!(t >= 0.5))
        throw DomainError("gamma_quarter_ratio: t must be >= 1/2");
    return std::exp(log_gamma(0.25 + 0.5 * t) - log_gamma(0.75 + 0.5 * t));
}

struct LegendreValue {
    double value;
    std::size_t terms;
    bool accurate; // false when the term cap was hit or cancellation ate the digits
};

namespace detail {

inline constexpr std::size_t legendre_term_cap = 1000000;
inline constexpr double legendre_rel_tol = 1e-13;
inline constexpr double legendre_loss_tol = 1e-10;

// F(-nu, nu+1; 1; w) summed directly
inline LegendreValue legendre_direct(double nu, double w)
{
    double term = 1.0, sum = 1.0, biggest = 1.0;
    std::size_t n = 0;
    bool done = false;
    while (n < legendre_term_cap) {
        const double dn = static_cast<double>(n);
        term *= (dn - nu) * (dn + nu + 1.0) / ((dn + 1.0) * (dn + 1.0)) * w;
        sum += term;
        ++n;
        biggest = std::max(biggest, std::abs(term));
        if (term == 0.0 || (dn > nu && std::abs(term) < legendre_rel_tol * std::abs(sum))) {
            done = true;
            break;
        }
    }
    const bool ok = done && biggest * 1e-16 <= legendre_loss_tol * std::abs(sum);
    return {sum, n + 1, ok};
}

// expansion about x = -1 in y = (1+x)/2; the log term carries the antipodal singularity
inline LegendreValue legendre_near_minus_one(double nu, double y)
{
    const double ly = std::log(y);
    double c = 1.0, yn = 1.0;
    double g = -2.0 * euler_gamma - 2.0 * digamma(nu + 1.0);
    double s1 = 1.0, s2 = g - ly;
    double biggest = std::max(1.0, std::abs(s2));
    std::size_t n = 0;
    bool done = false;
    while (n < legendre_term_cap) {
        const double dn = static_cast<double>(n);
        g += 2.0 / (dn + 1.0) - 1.0 / (dn - nu) - 1.0 / (dn + nu + 1.0);
        c *= (dn - nu) * (dn + nu + 1.0) / ((dn + 1.0) * (dn + 1.0));
        yn *= y;
        const double a1 = c * yn;
        const double a2 = a1 * (g - ly);
        s1 += a1;
        s2 += a2;
        ++n;
        biggest = std::max({biggest, std::abs(a1), std::abs(a2)});
        if (dn > nu && std::abs(a1) < legendre_rel_tol * std::abs(s1) &&
            std::abs(a2) < legendre_rel_tol * std::abs(s2)) {
            done = true;
            break;
        }
    }
    const double sn = std::sin(pi * nu), cn = std::cos(pi * nu);
    const double value = cn * s1 - sn / pi * s2;
    const double scale = std::max(std::abs(cn), std::abs(sn));
    const bool ok = done && biggest * scale * 1e-16 <= legendre_loss_tol * std::max(std::abs(value), 1e-3);
    return {value, n + 1, ok};
}

} // namespace detail

/// P_nu(x), nu = t - 1/2, with term count and an accuracy flag.
inline LegendreValue legendre_p_eval(double t, double x)
{
    if (!(x > -1.0 && x <= 1.0))
        throw DomainError("legendre_p: x must lie in (-1, 1]");
    if (x == 1.0)
        return {1.0, 0, true};
    const double nu = t - 0.5;
    const double w = 0.5 * (1.0 - x);
    // integer degree: a polynomial, P_n(x) = (-1)^n P_n(-x) keeps the series short
    if (w > 0.5 && nu == std::nearbyint(nu)) {
        auto r = detail::legendre_direct(nu, 1.0 - w);
        if (std::fmod(nu, 2.0) != 0.0)
            r.value = -r.value;
        return r;
    }
    if (w <= 0.5 || std::abs(std::sin(pi * nu)) < 1e-8)
        return detail::legendre_direct(nu, w);
    return detail::legendre_near_minus_one(nu, 0.5 * (1.0 + x));
}

inline double legendre_p(double t, double x)
{
    return legendre_p_eval(t, x).value;
}

} // namespace spectra
