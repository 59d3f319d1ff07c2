#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dispersion.hpp"
#include "errors.hpp"
#include "model.hpp"

namespace spectra {

class InsufficientData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class PoleFamily { segment, sphere, zigzag };

inline std::string to_string(PoleFamily f)
{
    switch (f) {
    case PoleFamily::segment: return "segment";
    case PoleFamily::sphere: return "sphere";
    case PoleFamily::zigzag: return "zigzag";
    }
    return "?";
}

struct PolePoint {
    PoleFamily family;
    int n;
    double k;
};

struct Band {
    double k_lo = 0.0, k_hi = 0.0;
    std::optional<PolePoint> pole; // nearest pole point, if any in range

    double width() const { return k_hi - k_lo; }
};

struct Gap {
    double k_lo = 0.0, k_hi = 0.0;
};

struct Interval {
    double lo = 0.0, hi = 0.0;
};

inline double sphere_pole(int n, double a) { return std::sqrt(double(n) * (n + 1)) / a; }
inline double segment_pole(int n, double d) { return pi * n / d; }

/// Pole points of the Q entries the model reads, sorted by k.
inline std::vector<PolePoint> pole_points(const ModelParams& p, double k_max)
{
    std::vector<PolePoint> out;
    if (is_loose(p.kind))
        for (int n = 1; segment_pole(n, p.d) <= k_max; ++n)
            out.push_back({PoleFamily::segment, n, segment_pole(n, p.d)});
    for (int n = 1; sphere_pole(n, p.a) <= k_max; ++n)
        out.push_back({PoleFamily::sphere, n, sphere_pole(n, p.a)});
    if (uses_quarter_entry(p.kind))
        for (int n = 1; sphere_pole(2 * n, p.a) <= k_max; ++n)
            out.push_back({PoleFamily::zigzag, n, sphere_pole(2 * n, p.a)});
    std::stable_sort(out.begin(), out.end(), [](const PolePoint& x, const PolePoint& y) { return x.k < y.k; });
    return out;
}

// ---- pointwise membership -------------------------------------------------

/// Dispersion value at one momentum.  value2 is used by carpets only.
struct Probe {
    bool in = false;
    bool singular = false; // pole of the condition itself (no value)
    int side = 0;          // +1 / -1 above or below the band condition, 0 inside
    double value = 0.0;
    double value2 = 0.0;
    double excess = 0.0;   // distance outside the band condition, <= 0 inside
};

inline Probe probe(double k, const ModelParams& p)
{
    Probe r;
    try {
        if (is_chain(p.kind)) {
            const double v = cos_theta(k, p);
            r.value = v;
            r.excess = std::abs(v) - 1.0;
            r.in = r.excess <= 0.0;
            r.side = r.in ? 0 : (v > 0 ? 1 : -1);
        } else {
            const TorusRange tr = torus_range(k, p);
            r.value = tr.min;
            r.value2 = tr.max;
            r.in = tr.min <= 0.0 && tr.max >= 0.0;
            r.side = r.in ? 0 : (tr.min > 0.0 ? 1 : -1);
            r.excess = r.in ? std::max(tr.min, -tr.max) : (tr.min > 0.0 ? tr.min : -tr.max);
        }
        if (!std::isfinite(r.value) || !std::isfinite(r.value2))
            throw SingularError("non-finite dispersion value");
    } catch (const PoleError&) {
        r = Probe{false, true, 0, 0.0, 0.0, std::numeric_limits<double>::infinity()};
    } catch (const SingularError&) {
        r = Probe{false, true, 0, 0.0, 0.0, std::numeric_limits<double>::infinity()};
    }
    return r;
}

// offset used to step off a pole point
inline double pole_offset(double k) { return 1e-9 * std::max(1.0, k); }

inline bool at_pole(double k, const ModelParams& p)
{
    for (const auto& pp : pole_points(p, k * (1.0 + 1e-12) + 1e-12))
        if (std::abs(pp.k - k) <= pole_offset(k) * 0.5)
            return true;
    return false;
}

/// Spectrum membership; a pole point belongs to the spectrum when a band
/// reaches it from either side.
inline bool in_spectrum(double k, const ModelParams& p)
{
    if (at_pole(k, p)) {
        const double h = pole_offset(k);
        return probe(k - h, p).in || probe(k + h, p).in;
    }
    return probe(k, p).in;
}

// ---- scanning -------------------------------------------------------------

struct GridPoint {
    double k;
    bool guard; // sits exactly on a pole point, no value is computed there
};

struct Subinterval {
    double cut_lo, cut_hi; // partition points
    double lo, hi;         // sampled range, stepped off poles
    bool lo_pole, hi_pole;
};

inline std::vector<Subinterval> scan_partition(const ModelParams& p, double k_min, double k_max)
{
    std::vector<double> cuts;
    for (const auto& pp : pole_points(p, k_max))
        if (pp.k > k_min && pp.k < k_max && (cuts.empty() || pp.k - cuts.back() > 2.0 * pole_offset(pp.k)))
            cuts.push_back(pp.k);
    std::vector<Subinterval> out;
    double lo = k_min;
    bool lo_pole = at_pole(k_min, p);
    for (std::size_t i = 0; i <= cuts.size(); ++i) {
        const double hi = i < cuts.size() ? cuts[i] : k_max;
        const bool hi_pole = i < cuts.size() || at_pole(k_max, p);
        Subinterval s{lo, hi, lo_pole ? lo + pole_offset(lo) : lo, hi_pole ? hi - pole_offset(hi) : hi, lo_pole,
                      hi_pole};
        if (s.hi > s.lo)
            out.push_back(s);
        lo = hi;
        lo_pole = hi_pole;
    }
    return out;
}

inline std::vector<double> subinterval_grid(const Subinterval& s, int resolution)
{
    std::vector<double> g(resolution + 1);
    for (int i = 0; i <= resolution; ++i)
        g[i] = s.lo + (s.hi - s.lo) * i / resolution;
    g.back() = s.hi;
    return g;
}

/// Every point at which a trace is reported: pole points plus the sample grid.
inline std::vector<GridPoint> scan_grid(const ModelParams& p, double k_min, double k_max, int resolution)
{
    std::vector<GridPoint> out;
    const auto parts = scan_partition(p, k_min, k_max);
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const auto& s = parts[i];
        if (s.lo_pole)
            out.push_back({s.cut_lo, true});
        for (double k : subinterval_grid(s, resolution))
            out.push_back({k, false});
        if (s.hi_pole && i + 1 == parts.size())
            out.push_back({s.cut_hi, true});
    }
    return out;
}

struct ScanOptions {
    int resolution = 64;
    double edge_rel_tol = 1e-10;
};

struct ScanResult {
    std::vector<Band> bands;
    std::vector<std::string> warnings;
    std::size_t coarse_bands = 0; // bands spanning fewer than 3 grid points
};

namespace detail {

struct Sample {
    double k;
    Probe pr;
};

template <class Pred>
double bisect_pred(Pred&& ok, double k_in, double k_out, double rel_tol)
{
    while (std::abs(k_out - k_in) > rel_tol * std::max(std::abs(k_in), std::abs(k_out))) {
        const double m = 0.5 * (k_in + k_out);
        if (m == k_in || m == k_out)
            break;
        (ok(m) ? k_in : k_out) = m;
    }
    return k_in;
}

// band edge between an in-band and an out-of-band point
inline double bisect_edge(double k_in, double k_out, const ModelParams& p, double rel_tol)
{
    return bisect_pred([&](double k) { return probe(k, p).in; }, k_in, k_out, rel_tol);
}

// look for an in-band point between two out-of-band samples on opposite sides
inline std::optional<Sample> hunt_crossing(Sample a, Sample b, const ModelParams& p, double rel_tol)
{
    for (int it = 0; it < 200; ++it) {
        if (std::abs(b.k - a.k) <= rel_tol * a.k)
            return std::nullopt;
        const double m = 0.5 * (a.k + b.k);
        const Probe pm = probe(m, p);
        if (pm.in)
            return Sample{m, pm};
        if (pm.singular)
            return std::nullopt;
        (pm.side == a.pr.side ? a : b) = Sample{m, pm};
    }
    return std::nullopt;
}

// minimize the excess on [lo, hi]; return the minimizer if it is inside a band
inline std::optional<Sample> hunt_dip(double lo, double hi, const ModelParams& p)
{
    double fx = 0.0;
    const double x = golden_min(
        [&](double k) {
            const Probe q = probe(k, p);
            return q.singular ? std::numeric_limits<double>::infinity() : q.excess;
        },
        lo, hi, fx);
    if (fx <= 0.0) {
        const Probe q = probe(x, p);
        if (q.in)
            return Sample{x, q};
    }
    return std::nullopt;
}

} // namespace detail

/// Bands on [k_min, k_max].
inline ScanResult scan_bands(const ModelParams& p, double k_min, double k_max, const ScanOptions& opt = {})
{
    if (!(k_min > 0.0 && k_max > k_min))
        throw DomainError("scan_bands: need 0 < k_min < k_max");
    if (opt.resolution < 16)
        throw DomainError("scan_bands: resolution must be at least 16");

    struct Piece {
        double lo, hi;
        std::optional<double> pole_lo, pole_hi; // piece runs into this pole point
        std::size_t grid_pts;
    };
    std::vector<Piece> pieces;

    for (const auto& s : scan_partition(p, k_min, k_max)) {
        const auto grid = subinterval_grid(s, opt.resolution);
        std::vector<detail::Sample> smp;
        smp.reserve(grid.size());
        for (double k : grid)
            smp.push_back({k, probe(k, p)});

        // in-band points hiding between two out-of-band samples
        std::vector<detail::Sample> aug;
        const std::size_t n = smp.size();
        for (std::size_t i = 0; i < n; ++i) {
            aug.push_back(smp[i]);
            if (i + 1 == n)
                break;
            const auto& a = smp[i];
            const auto& b = smp[i + 1];
            if (a.pr.in || b.pr.in || a.pr.singular || b.pr.singular)
                continue;
            std::optional<detail::Sample> hit;
            if (a.pr.side != b.pr.side) {
                hit = detail::hunt_crossing(a, b, p, opt.edge_rel_tol);
            } else {
                const bool dip_a = (i == 0 || smp[i - 1].pr.excess > a.pr.excess) && a.pr.excess < b.pr.excess;
                const bool dip_b = b.pr.excess <= a.pr.excess && (i + 2 == n || smp[i + 2].pr.excess > b.pr.excess);
                if (dip_a || dip_b)
                    hit = detail::hunt_dip(a.k, b.k, p);
            }
            if (hit)
                aug.push_back(*hit);
        }

        for (std::size_t i = 0; i < aug.size();) {
            if (!aug[i].pr.in) {
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j + 1 < aug.size() && aug[j + 1].pr.in)
                ++j;
            Piece b{};
            b.lo = i == 0 ? aug[0].k : detail::bisect_edge(aug[i].k, aug[i - 1].k, p, opt.edge_rel_tol);
            b.hi = j + 1 == aug.size() ? aug[j].k : detail::bisect_edge(aug[j].k, aug[j + 1].k, p, opt.edge_rel_tol);
            if (i == 0 && s.lo_pole)
                b.pole_lo = s.cut_lo;
            if (j + 1 == aug.size() && s.hi_pole)
                b.pole_hi = s.cut_hi;
            b.grid_pts = std::count_if(grid.begin(), grid.end(), [&](double k) { return k >= b.lo && k <= b.hi; });
            pieces.push_back(b);
            i = j + 1;
        }
    }

    ScanResult res;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        Band b{pieces[i].pole_lo ? std::max(k_min, *pieces[i].pole_lo) : pieces[i].lo, 0.0, std::nullopt};
        std::size_t pts = pieces[i].grid_pts;
        // pieces on both sides of one pole point form a single band
        while (pieces[i].pole_hi && i + 1 < pieces.size() && pieces[i + 1].pole_lo &&
               *pieces[i + 1].pole_lo == *pieces[i].pole_hi) {
            ++i;
            pts += pieces[i].grid_pts;
        }
        b.k_hi = pieces[i].pole_hi ? std::min(k_max, *pieces[i].pole_hi) : pieces[i].hi;
        res.bands.push_back(b);
        if (pts < 3)
            ++res.coarse_bands;
    }

    const auto poles = pole_points(p, 2.0 * k_max + 10.0);
    for (auto& b : res.bands) {
        const double mid = 0.5 * (b.k_lo + b.k_hi);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& pp : poles)
            if (std::abs(pp.k - mid) < best) {
                best = std::abs(pp.k - mid);
                b.pole = pp;
            }
    }
    if (res.coarse_bands > 0)
        res.warnings.push_back("resolution-too-coarse: " + std::to_string(res.coarse_bands) +
                               " band(s) span fewer than 3 grid points");
    return res;
}

inline std::vector<Gap> gaps_from_bands(const std::vector<Band>& bands, double k_min, double k_max)
{
    std::vector<Gap> out;
    double cur = k_min;
    for (const auto& b : bands) {
        if (b.k_lo > cur)
            out.push_back({cur, std::min(b.k_lo, k_max)});
        cur = std::max(cur, b.k_hi);
    }
    if (k_max > cur)
        out.push_back({cur, k_max});
    return out;
}

// ---- interval families ----------------------------------------------------

enum class Regime { loose, tight };

inline std::string to_string(Regime r) { return r == Regime::loose ? "loose" : "tight"; }

struct FamilyInterval {
    PolePoint center;
    double lo, hi;
};

inline std::vector<Interval> merge_intervals(std::vector<Interval> iv)
{
    std::sort(iv.begin(), iv.end(), [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
    std::vector<Interval> out;
    for (const auto& x : iv) {
        if (!out.empty() && x.lo <= out.back().hi)
            out.back().hi = std::max(out.back().hi, x.hi);
        else
            out.push_back(x);
    }
    return out;
}

struct IntervalFamily {
    Regime regime = Regime::loose;
    double epsilon = 0.3;
    double k_max = 0.0;
    std::vector<FamilyInterval> intervals; // sorted by center

    /// merged hulls of overlapping intervals
    std::vector<Interval> hulls() const
    {
        std::vector<Interval> iv;
        for (const auto& f : intervals)
            iv.push_back({f.lo, f.hi});
        return merge_intervals(std::move(iv));
    }
};

inline double family_threshold(Regime r, double eps, double k)
{
    if (r == Regime::loose)
        return std::pow(k, -eps);
    const double l = std::log(k);
    return l > 0.0 ? std::pow(l, -eps) : std::numeric_limits<double>::infinity();
}

inline double family_function(PoleFamily f, double k, const ModelParams& p)
{
    switch (f) {
    case PoleFamily::segment: return std::sin(k * p.d);
    case PoleFamily::sphere: return std::cos(pi * SpectralParam::from_k(k, p.a).t);
    case PoleFamily::zigzag: return std::cos(pi * (0.25 + 0.5 * SpectralParam::from_k(k, p.a).t));
    }
    return 0.0;
}

inline Regime regime_of(ModelKind m) { return is_loose(m) ? Regime::loose : Regime::tight; }

inline double default_epsilon(ModelKind m)
{
    if (m == ModelKind::LooseCarpet)
        return 0.2;
    return is_loose(m) ? 0.3 : 0.5;
}

inline double epsilon_cap(ModelKind m)
{
    if (m == ModelKind::LooseCarpet)
        return 0.25;
    return is_loose(m) ? 0.5 : 1.0;
}

namespace detail {

// march outward from the center, then bisect the threshold inequality
inline double family_edge(PoleFamily f, double c, double dir, Regime r, double eps, const ModelParams& p,
                          double limit)
{
    auto ok = [&](double k) { return std::abs(family_function(f, k, p)) <= family_threshold(r, eps, k); };
    const double spacing = f == PoleFamily::segment ? pi / p.d : 1.0 / p.a;
    const double step = spacing / 256.0;
    double in = c;
    for (;;) {
        const double next = in + dir * step;
        if (dir > 0 && next >= limit)
            return limit;
        if (dir < 0 && next <= 0.0)
            return ok(0.5 * in) ? 0.0 : bisect_pred(ok, in, 0.5 * in, 1e-10);
        if (!ok(next))
            return bisect_pred(ok, in, next, 1e-10);
        in = next;
    }
}

} // namespace detail

/// Neighbourhoods of the pole points where the matching Q denominator is
/// below k^-eps (loose) or (ln k)^-eps (tight).
inline IntervalFamily interval_family(const ModelParams& p, double epsilon, double k_max)
{
    if (!(epsilon > 0.0 && epsilon < epsilon_cap(p.kind)))
        throw DomainError("interval_family: epsilon out of range for " + to_string(p.kind));
    IntervalFamily fam{regime_of(p.kind), epsilon, k_max, {}};
    const double limit = 2.0 * k_max + 10.0;
    for (const auto& pp : pole_points(p, k_max)) {
        const double lo = detail::family_edge(pp.family, pp.k, -1.0, fam.regime, epsilon, p, limit);
        const double hi = detail::family_edge(pp.family, pp.k, +1.0, fam.regime, epsilon, p, limit);
        fam.intervals.push_back({pp, lo, hi});
    }
    return fam;
}

// ---- gap dominance ----------------------------------------------------------

struct DominanceReport {
    double K = 0.0;
    std::vector<Interval> violations; // band parts above K outside every family interval
    double k_clear = 0.0;             // no violation anywhere above this momentum
    double scanned_to = 0.0;
};

inline DominanceReport check_gap_dominance(const std::vector<Band>& bands, const IntervalFamily& fam, double K)
{
    DominanceReport r{K, {}, 0.0, fam.k_max};
    const auto hulls = fam.hulls();
    for (const auto& b : bands) {
        double cur = b.k_lo;
        for (const auto& h : hulls) {
            if (h.hi < cur)
                continue;
            if (h.lo >= b.k_hi)
                break;
            if (h.lo > cur) {
                r.k_clear = std::max(r.k_clear, h.lo);
                if (h.lo > K)
                    r.violations.push_back({std::max(cur, K), h.lo});
            }
            cur = std::max(cur, h.hi);
            if (cur >= b.k_hi)
                break;
        }
        if (cur < b.k_hi) {
            r.k_clear = std::max(r.k_clear, b.k_hi);
            if (b.k_hi > K)
                r.violations.push_back({std::max(cur, K), b.k_hi});
        }
    }
    return r;
}

// ---- band-to-gap statistics -------------------------------------------------

struct BandGapStats {
    int n = 0;
    PolePoint pole{};
    double cluster_lo = 0.0, cluster_hi = 0.0;
    double B = 0.0;
    double L = 0.0;
    double ratio = 0.0;
};

inline double covered_length(const std::vector<Band>& bands, double lo, double hi)
{
    double s = 0.0;
    for (const auto& b : bands)
        s += std::max(0.0, std::min(b.k_hi, hi) - std::max(b.k_lo, lo));
    return s;
}

/// One row per cluster of family intervals that has a following cluster
/// inside [k_min, k_max].
inline std::vector<BandGapStats> band_gap_stats(const std::vector<Band>& bands, const IntervalFamily& fam,
                                                double k_min, double k_max)
{
    std::vector<BandGapStats> out;
    const auto hulls = fam.hulls();
    for (std::size_t i = 0; i + 1 < hulls.size(); ++i) {
        const auto& h = hulls[i];
        const auto& nx = hulls[i + 1];
        if (h.lo < k_min || nx.lo > k_max)
            continue;
        BandGapStats s;
        s.n = static_cast<int>(out.size()) + 1;
        s.cluster_lo = h.lo;
        s.cluster_hi = h.hi;
        for (const auto& f : fam.intervals)
            if (f.center.k >= h.lo && f.center.k <= h.hi) {
                s.pole = f.center;
                break;
            }
        s.B = covered_length(bands, h.lo, h.hi);
        const double region = nx.lo - h.hi;
        s.L = region - covered_length(bands, h.hi, nx.lo);
        s.ratio = s.L > 0.0 ? s.B / s.L : std::numeric_limits<double>::infinity();
        out.push_back(s);
    }
    return out;
}

enum class RatioRegime { power, log };

inline std::string to_string(RatioRegime r) { return r == RatioRegime::power ? "power" : "log"; }

// envelope / trend parameters
inline constexpr int fit_n0 = 5;
inline constexpr int fit_window = 20;      // last indices over which C_n must not grow
inline constexpr int trend_block = 5;      // ratio trend is judged on block maxima
inline constexpr int trend_max_inversions = 3;

struct RatioFit {
    RatioRegime regime = RatioRegime::power;
    double epsilon = 0.0;
    int n0 = fit_n0;
    std::vector<double> C;        // C_n for every row (NaN below n0)
    double envelope = 0.0;        // max C_n, n >= n0
    double early_max = 0.0;       // max C_n over the first half of the last window
    double late_max = 0.0;        // ... and over the second half
    bool bounded = false;
    bool non_increasing = false;
    int trend_inversions = 0;     // rises between consecutive block maxima of the ratio
    bool trend_ok = false;
    bool consistent = false;
};

inline double envelope_factor(RatioRegime r, double eps, int n)
{
    return r == RatioRegime::power ? std::pow(double(n), eps) : std::pow(std::log(double(n)), eps);
}

inline RatioFit fit_ratio_bound(const std::vector<BandGapStats>& stats, RatioRegime regime, double epsilon,
                                int n0 = fit_n0)
{
    if (stats.size() < 10)
        throw InsufficientData("fit_ratio_bound: need at least 10 clusters, have " + std::to_string(stats.size()));
    RatioFit f;
    f.regime = regime;
    f.epsilon = epsilon;
    f.n0 = n0;
    const int N = static_cast<int>(stats.size());
    f.C.assign(N, std::numeric_limits<double>::quiet_NaN());
    f.bounded = true;
    for (int i = 0; i < N; ++i) {
        const int n = stats[i].n;
        if (n < n0)
            continue;
        f.C[i] = stats[i].ratio * envelope_factor(regime, epsilon, n);
        if (!std::isfinite(f.C[i]))
            f.bounded = false;
        else
            f.envelope = std::max(f.envelope, f.C[i]);
    }
    const int w = std::min(fit_window, N - std::max(0, n0 - 1));
    const int start = N - w, half = start + w / 2;
    for (int i = start; i < N; ++i) {
        const double c = std::isfinite(f.C[i]) ? f.C[i] : 0.0;
        (i < half ? f.early_max : f.late_max) = std::max(i < half ? f.early_max : f.late_max, c);
    }
    f.non_increasing = f.late_max <= f.early_max * (1.0 + 1e-9);

    std::vector<double> blocks;
    for (int i = 0; i < N; i += trend_block) {
        double m = 0.0;
        for (int j = i; j < std::min(N, i + trend_block); ++j)
            m = std::max(m, stats[j].ratio);
        blocks.push_back(m);
    }
    for (std::size_t i = 1; i < blocks.size(); ++i)
        if (blocks[i] > blocks[i - 1] * (1.0 + 1e-9))
            ++f.trend_inversions;
    f.trend_ok = f.trend_inversions <= trend_max_inversions;
    f.consistent = f.bounded && f.non_increasing;
    return f;
}

} // namespace spectra
