#pragma once

#include "errors.hpp"
#include "greens.hpp"

namespace spectra {

struct Coupling {
    double alpha = 1.0;
};

/// Coefficients of [Q0_11, alpha; alpha, Q1_11]^{-1}.
struct KreinCorrection {
    double tt = 0.0, ww = 0.0, uu = 0.0, vv = 0.0;
};

inline KreinCorrection krein_correction(double q0_11, double q1_11, Coupling c)
{
    const double D = q0_11 * q1_11 - c.alpha * c.alpha;
    if (!(std::abs(D) >= guard_threshold))
        throw SingularError("krein_correction: singular cell denominator");
    return {q1_11 / D, -c.alpha / D, -c.alpha / D, q0_11 / D};
}

/// Effective 2x2 block of one sphere+segment cell seen from its outer endpoints.
inline QBlock tilde_q(const QBlock& q0, const QBlock& q1, Coupling c)
{
    const double D = q0.q11 * q1.q11 - c.alpha * c.alpha;
    if (!(std::abs(D) >= guard_threshold))
        throw SingularError("tilde_q: singular cell denominator");
    return {
        q0.q22 - q1.q11 * q0.q12 * q0.q21 / D,
        c.alpha * q1.q12 * q0.q21 / D,
        c.alpha * q0.q12 * q1.q21 / D,
        q1.q22 - q0.q11 * q1.q12 * q1.q21 / D,
    };
}

/// Floquet condition of a chain of identical cells joined with coupling alpha.
inline double cos_theta_generic(const QBlock& tq, Coupling c)
{
    if (!(c.alpha > 0.0))
        throw DomainError("cos_theta_generic: coupling must be positive");
    if (!(std::abs(tq.q12) >= guard_threshold))
        throw SingularError("cos_theta_generic: vanishing off-diagonal entry");
    return (tq.q11 * tq.q22 - tq.q12 * tq.q21 - c.alpha * c.alpha) / (2.0 * c.alpha * tq.q12);
}

} // namespace spectra
