#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "spectra/bands.hpp"

using namespace spectra;

namespace {

ModelParams model(ModelKind m, double alpha = 1.0)
{
    ModelParams p;
    p.kind = m;
    p.alpha = alpha;
    return p;
}

const std::vector<ModelKind> all_models = {ModelKind::LooseStraight, ModelKind::LooseZigzag,
                                           ModelKind::TightStraight, ModelKind::TightZigzag,
                                           ModelKind::LooseCarpet,   ModelKind::TightCarpet};

const Band* nearest(const std::vector<Band>& bs, double c)
{
    const Band* best = nullptr;
    for (const auto& b : bs)
        if (!best || std::abs(0.5 * (b.k_lo + b.k_hi) - c) < std::abs(0.5 * (best->k_lo + best->k_hi) - c))
            best = &b;
    return best;
}

} // namespace

TEST(PolePoints, Locations)
{
    const auto pts = pole_points(model(ModelKind::LooseStraight), 7.0);
    std::vector<double> sphere, segment;
    for (const auto& p : pts) {
        (p.family == PoleFamily::sphere ? sphere : segment).push_back(p.k);
        EXPECT_NE(p.family, PoleFamily::zigzag);
    }
    ASSERT_GE(sphere.size(), 3u);
    EXPECT_NEAR(sphere[0], std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(sphere[1], std::sqrt(6.0), 1e-15);
    EXPECT_NEAR(sphere[2], std::sqrt(12.0), 1e-15);
    ASSERT_EQ(segment.size(), 2u);
    EXPECT_NEAR(segment[0], pi, 1e-15);
    EXPECT_NEAR(segment[1], 2 * pi, 1e-15);
    EXPECT_TRUE(std::is_sorted(pts.begin(), pts.end(), [](auto& x, auto& y) { return x.k < y.k; }));
}

TEST(PolePoints, TightHasNoSegments)
{
    for (auto m : {ModelKind::TightStraight, ModelKind::TightZigzag, ModelKind::TightCarpet})
        for (const auto& p : pole_points(model(m), 30.0))
            EXPECT_NE(p.family, PoleFamily::segment);
    int zig = 0;
    for (const auto& p : pole_points(model(ModelKind::TightZigzag), 30.0))
        if (p.family == PoleFamily::zigzag) {
            ++zig;
            EXPECT_NEAR(p.k, sphere_pole(2 * p.n, 1.0), 1e-12);
        }
    EXPECT_GT(zig, 0);
}

TEST(InSpectrum, ChainAgreesWithCondition)
{
    for (auto m : {ModelKind::LooseStraight, ModelKind::LooseZigzag, ModelKind::TightStraight, ModelKind::TightZigzag}) {
        const auto p = model(m);
        for (double k = 0.113; k < 15.0; k += 0.0571) {
            double c;
            try {
                c = cos_theta(k, p);
            } catch (const std::exception&) {
                continue;
            }
            EXPECT_EQ(in_spectrum(k, p), std::abs(c) <= 1.0) << to_string(m) << " " << k;
        }
    }
}

TEST(InSpectrum, CarpetNeedsSignChangeOnTorus)
{
    for (auto m : {ModelKind::LooseCarpet, ModelKind::TightCarpet}) {
        const auto p = model(m);
        for (double k = 0.21; k < 10.0; k += 0.173) {
            TorusRange r;
            try {
                r = torus_range(k, p);
            } catch (const std::exception&) {
                continue;
            }
            EXPECT_EQ(in_spectrum(k, p), r.min <= 0.0 && r.max >= 0.0) << k;
        }
    }
}

TEST(ScanPartition, CutsAtPolesAndCoversRange)
{
    const auto p = model(ModelKind::LooseZigzag);
    const auto parts = scan_partition(p, 0.1, 20.0);
    ASSERT_FALSE(parts.empty());
    EXPECT_DOUBLE_EQ(parts.front().cut_lo, 0.1);
    EXPECT_DOUBLE_EQ(parts.back().cut_hi, 20.0);
    for (std::size_t i = 1; i < parts.size(); ++i)
        EXPECT_DOUBLE_EQ(parts[i].cut_lo, parts[i - 1].cut_hi);
    // zigzag poles coincide with every other sphere pole
    std::vector<double> cuts;
    for (const auto& pp : pole_points(p, 20.0))
        if (pp.k > 0.1 && pp.k < 20.0)
            cuts.push_back(pp.k);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(), [](double x, double y) { return std::abs(x - y) < 1e-12; }),
               cuts.end());
    EXPECT_EQ(parts.size(), cuts.size() + 1);
}

TEST(ScanGrid, GuardRowsOnlyAtPoles)
{
    const auto p = model(ModelKind::TightStraight);
    const auto g = scan_grid(p, 0.1, 10.0, 32);
    int guards = 0;
    for (const auto& x : g)
        if (x.guard) {
            ++guards;
            EXPECT_TRUE(at_pole(x.k, p)) << x.k;
        }
    EXPECT_EQ(guards, int(pole_points(p, 10.0).size()));
}

TEST(ScanBands, LowestBandAgainstDenseScan)
{
    const auto p = model(ModelKind::LooseStraight);
    const auto ref = oracle::dense_scan(p, 0.1, 4.0, 1e-4);
    const auto got = scan_bands(p, 0.1, 4.0).bands;
    ASSERT_EQ(got.size(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
        EXPECT_NEAR(got[i].k_lo, ref[i].lo, 1e-4 + 1e-9) << i;
        EXPECT_NEAR(got[i].k_hi, ref[i].hi, 1e-4 + 1e-9) << i;
        EXPECT_LE(got[i].k_lo, ref[i].lo + 1e-12);
        EXPECT_GE(got[i].k_hi, ref[i].hi - 1e-12);
    }
}

TEST(ScanBands, EmptyInsideGap)
{
    // (0.77, 1.31) lies in a gap of the loose straight chain
    EXPECT_TRUE(scan_bands(model(ModelKind::LooseStraight), 0.8, 1.3).bands.empty());
}

TEST(ScanBands, BadArguments)
{
    EXPECT_THROW(scan_bands(model(ModelKind::LooseStraight), 2.0, 1.0), DomainError);
    EXPECT_THROW(scan_bands(model(ModelKind::LooseStraight), 0.0, 1.0), DomainError);
    EXPECT_THROW(scan_bands(model(ModelKind::LooseStraight), 0.1, 1.0, {8}), DomainError);
}

TEST(ScanBands, BandsAndGapsTileRange)
{
    for (auto m : all_models) {
        const double lo = 0.1, hi = 20.0;
        const auto bands = scan_bands(model(m), lo, hi).bands;
        const auto gaps = gaps_from_bands(bands, lo, hi);
        double total = 0.0;
        for (const auto& b : bands) {
            EXPECT_LT(b.k_lo, b.k_hi);
            total += b.k_hi - b.k_lo;
        }
        for (const auto& g : gaps)
            total += g.k_hi - g.k_lo;
        EXPECT_NEAR(total, hi - lo, 1e-9) << to_string(m);
        for (std::size_t i = 1; i < bands.size(); ++i)
            EXPECT_GT(bands[i].k_lo, bands[i - 1].k_hi);
    }
}

TEST(ScanBands, ResolutionDoublingStable)
{
    for (auto m : all_models) {
        const auto a = scan_bands(model(m), 0.1, 20.0, {64}).bands;
        const auto b = scan_bands(model(m), 0.1, 20.0, {128}).bands;
        ASSERT_EQ(a.size(), b.size()) << to_string(m);
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_NEAR(a[i].k_lo, b[i].k_lo, 1e-8) << to_string(m) << " " << i;
            EXPECT_NEAR(a[i].k_hi, b[i].k_hi, 1e-8) << to_string(m) << " " << i;
        }
    }
}

TEST(ScanBands, Deterministic)
{
    const auto a = scan_bands(model(ModelKind::LooseCarpet), 0.1, 15.0).bands;
    const auto b = scan_bands(model(ModelKind::LooseCarpet), 0.1, 15.0).bands;
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].k_lo, b[i].k_lo);
        EXPECT_EQ(a[i].k_hi, b[i].k_hi);
    }
}

TEST(ScanBands, WidthsGrowWithCoupling)
{
    for (auto m : {ModelKind::LooseStraight, ModelKind::TightStraight}) {
        std::vector<std::vector<Band>> runs;
        for (double al : {1e-3, 1e-2, 1e-1})
            runs.push_back(scan_bands(model(m, al), 0.5, 8.0, {256}).bands);
        ASSERT_GE(runs[0].size(), 5u);
        for (std::size_t i = 0; i < 5; ++i) {
            const double c = 0.5 * (runs[0][i].k_lo + runs[0][i].k_hi);
            double w = runs[0][i].width();
            for (std::size_t j = 1; j < runs.size(); ++j) {
                const Band* b = nearest(runs[j], c);
                ASSERT_NE(b, nullptr);
                EXPECT_GE(b->width(), w) << to_string(m) << " band " << i;
                w = b->width();
            }
        }
    }
}

TEST(Gaps, FromBands)
{
    EXPECT_EQ(gaps_from_bands({}, 1.0, 2.0).size(), 1u);
    EXPECT_TRUE(gaps_from_bands({Band{1.0, 2.0, {}}}, 1.0, 2.0).empty());
    const auto g = gaps_from_bands({Band{1.2, 1.3, {}}, Band{1.5, 1.6, {}}}, 1.0, 2.0);
    ASSERT_EQ(g.size(), 3u);
    EXPECT_DOUBLE_EQ(g[0].k_lo, 1.0);
    EXPECT_DOUBLE_EQ(g[2].k_hi, 2.0);
}

TEST(IntervalFamily, EpsilonBounds)
{
    EXPECT_THROW(interval_family(model(ModelKind::LooseStraight), 0.5, 20.0), DomainError);
    EXPECT_THROW(interval_family(model(ModelKind::LooseCarpet), 0.3, 20.0), DomainError);
    EXPECT_THROW(interval_family(model(ModelKind::TightStraight), 1.0, 20.0), DomainError);
    EXPECT_NO_THROW(interval_family(model(ModelKind::TightStraight), 0.9, 20.0));
}

TEST(IntervalFamily, IntervalsContainTheirPole)
{
    for (auto m : all_models) {
        const auto fam = interval_family(model(m), default_epsilon(m), 30.0);
        for (const auto& iv : fam.intervals) {
            EXPECT_LT(iv.lo, iv.center.k);
            EXPECT_GT(iv.hi, iv.center.k);
            const double f = family_function(iv.center.family, iv.center.k, model(m));
            EXPECT_NEAR(f, 0.0, 1e-9);
        }
    }
}

TEST(IntervalFamily, SegmentHalfWidthAsymptotics)
{
    const auto fam = interval_family(model(ModelKind::LooseStraight), 0.3, 60.0);
    for (const auto& iv : fam.intervals)
        if (iv.center.family == PoleFamily::segment && iv.center.n >= 10) {
            const double half = 0.5 * (iv.hi - iv.lo);
            const double ref = std::pow(iv.center.k, -0.3); // d = 1
            EXPECT_GT(half / ref, 0.5);
            EXPECT_LT(half / ref, 2.0);
        }
}

TEST(GapDominance, ReportSemantics)
{
    IntervalFamily fam{Regime::loose, 0.3, 10.0, {}};
    fam.intervals.push_back({{PoleFamily::sphere, 1, 2.0}, 1.9, 2.1});
    fam.intervals.push_back({{PoleFamily::sphere, 2, 4.0}, 3.9, 4.1});
    EXPECT_TRUE(check_gap_dominance({}, fam, 0.0).violations.empty());
    const auto r = check_gap_dominance({Band{1.95, 2.05, {}}, Band{3.0, 3.5, {}}, Band{4.0, 4.3, {}}}, fam, 0.0);
    ASSERT_EQ(r.violations.size(), 2u);
    EXPECT_DOUBLE_EQ(r.violations[0].lo, 3.0);
    EXPECT_DOUBLE_EQ(r.violations[1].lo, 4.1);
    EXPECT_DOUBLE_EQ(r.k_clear, 4.3);
    EXPECT_EQ(check_gap_dominance({Band{3.0, 3.5, {}}}, fam, 3.6).violations.size(), 0u);
}

TEST(BandGapStats, Synthetic)
{
    IntervalFamily fam{Regime::loose, 0.3, 10.0, {}};
    for (int n = 1; n <= 4; ++n)
        fam.intervals.push_back({{PoleFamily::sphere, n, 2.0 * n}, 2.0 * n - 0.1, 2.0 * n + 0.1});
    const auto s = band_gap_stats({Band{1.95, 2.05, {}}, Band{5.9, 6.0, {}}}, fam, 0.1, 10.0);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_NEAR(s[0].B, 0.1, 1e-15);
    EXPECT_NEAR(s[0].L, 1.8, 1e-15);
    EXPECT_EQ(s[1].B, 0.0); // cluster without bands
    EXPECT_EQ(s[1].ratio, 0.0);
    EXPECT_NEAR(s[2].B, 0.1, 1e-15);
}

TEST(FitRatioBound, SyntheticPowerLaw)
{
    std::vector<BandGapStats> s;
    for (int n = 1; n <= 50; ++n) {
        BandGapStats r;
        r.n = n;
        r.ratio = 2.0 * std::pow(n, -0.3);
        s.push_back(r);
    }
    const auto f = fit_ratio_bound(s, RatioRegime::power, 0.3);
    EXPECT_NEAR(f.envelope, 2.0, 1e-12);
    EXPECT_TRUE(f.bounded);
    EXPECT_TRUE(f.non_increasing);
    EXPECT_EQ(f.trend_inversions, 0);
}

TEST(FitRatioBound, SyntheticLogLaw)
{
    std::vector<BandGapStats> s;
    for (int n = 2; n <= 60; ++n) {
        BandGapStats r;
        r.n = n;
        r.ratio = std::pow(std::log(double(n)), -0.5);
        s.push_back(r);
    }
    const auto f = fit_ratio_bound(s, RatioRegime::log, 0.5);
    EXPECT_NEAR(f.envelope, 1.0, 1e-12);
    EXPECT_TRUE(f.consistent);
}

TEST(FitRatioBound, DetectsGrowth)
{
    std::vector<BandGapStats> s;
    for (int n = 1; n <= 40; ++n) {
        BandGapStats r;
        r.n = n;
        r.ratio = 0.1 * n; // ratio grows: envelope not flat, trend rising
        s.push_back(r);
    }
    const auto f = fit_ratio_bound(s, RatioRegime::power, 0.3);
    EXPECT_FALSE(f.non_increasing);
    EXPECT_FALSE(f.trend_ok);
    EXPECT_THROW(fit_ratio_bound(std::vector<BandGapStats>(5), RatioRegime::power, 0.3), InsufficientData);
}
