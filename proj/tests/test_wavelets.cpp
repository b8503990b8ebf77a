#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "cuspscope/wavelets.hpp"

using namespace cuspscope;

namespace {

const double pi = std::numbers::pi;

TEST(Spectrum, LogNormalAtUnitFrequency) {
    EXPECT_DOUBLE_EQ(spectrum_value(log_normal_wavelet(1), 1.0), 1.0);
    EXPECT_DOUBLE_EQ(spectrum_value(log_normal_wavelet(2), 0.6, 0.8), 1.0);
}

TEST(Spectrum, VanishesAtOrigin) {
    for (const auto& w : {log_normal_wavelet(1), log_normal_wavelet(2), gaussian_derivative_wavelet(1, 2),
                          gaussian_derivative_wavelet(2, 4), laplacian_of(log_normal_wavelet(2))})
        EXPECT_EQ(spectrum_value(w, 0.0, 0.0), 0.0) << w.name();
}

TEST(Spectrum, MexicanHatClosedForm) {
    auto w = gaussian_derivative_wavelet(1, 2);
    EXPECT_NEAR(spectrum_value(w, 1.0), std::exp(-0.5), 1e-15);
    for (double k : {0.1, 0.7, 2.5, 6.0}) EXPECT_NEAR(spectrum_value(w, -k), k * k * std::exp(-0.5 * k * k), 1e-15);
}

TEST(Spectrum, LogNormalDecaysFasterThanAnyPowerAtBothEnds) {
    auto w = log_normal_wavelet(1);
    for (int p : {2, 6, 12}) {
        EXPECT_LT(spectrum_value(w, 1e-8) / std::pow(1e-8, p), 1e-3) << p;
        EXPECT_LT(spectrum_value(w, 1e8) * std::pow(1e8, p), 1e-3) << p;
    }
}

TEST(Spectrum, EvalRejectsNonFiniteFrequencies) {
    auto w = log_normal_wavelet(2);
    std::vector<Vec2> k{{1.0, 0.0}, {std::numeric_limits<double>::quiet_NaN(), 0.0}};
    try {
        eval_spectrum(w, k);
        FAIL() << "expected a config error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::config);
    }
}

TEST(Spectrum, EvalIsRealValued) {
    auto w = gaussian_derivative_wavelet(2, 3);
    auto v = eval_spectrum(w, std::vector<Vec2>{{0.3, -1.2}, {2.0, 0.5}});
    for (auto z : v) EXPECT_EQ(z.imag(), 0.0);
    EXPECT_DOUBLE_EQ(v[1].real(), spectrum_value(w, 2.0, 0.5));
}

TEST(Spectrum, RejectsUnsupportedDimension) {
    EXPECT_THROW(log_normal_wavelet(3), Error);
}

TEST(Admissibility, LogNormalGaussianIntegral) {
    auto p = admissibility_profile(log_normal_wavelet(1));
    EXPECT_NEAR(p.min_value, std::sqrt(pi / 2.0), 1e-10);
    EXPECT_NEAR(p.max_value, std::sqrt(pi / 2.0), 1e-10);
}

TEST(Admissibility, GaussianDerivativeGammaIntegral) {
    // ∫ a^{2m} e^{-a²} da/a = Γ(m)/2
    for (int m : {1, 2, 4, 6}) {
        auto p = admissibility_profile(gaussian_derivative_wavelet(1, m));
        EXPECT_NEAR(p.max_value, 0.5 * std::tgamma(m), 1e-10 * std::tgamma(m)) << m;
    }
}

TEST(Admissibility, RadialProfileIsDirectionIndependent) {
    for (const auto& w : {log_normal_wavelet(2, 0.7, 1.3), gaussian_derivative_wavelet(2, 4)}) {
        auto p = admissibility_profile(w);
        EXPECT_EQ(p.values.size(), 16u);
        EXPECT_NEAR(p.max_value / p.min_value, 1.0, 1e-12) << w.name();
    }
}

TEST(Admissibility, LaplacianOfLogNormalIsFinitePositive) {
    auto p = admissibility_profile(laplacian_of(log_normal_wavelet(1)));
    EXPECT_GT(p.min_value, 0.0);
    EXPECT_TRUE(std::isfinite(p.max_value));
    // ∫ e^{4t} e^{-2t²} dt = sqrt(pi/2) e^2
    EXPECT_NEAR(p.max_value, std::sqrt(pi / 2.0) * std::exp(2.0), 1e-8);
}

TEST(Admissibility, DirectionalTableScalesProfile) {
    auto base = log_normal_wavelet(1);
    auto w = tabulated_wavelet(base, {2.0, 0.5});
    auto p = admissibility_profile(w);
    EXPECT_NEAR(p.values[0], 4.0 * std::sqrt(pi / 2.0), 1e-9);   // k < 0
    EXPECT_NEAR(p.values[1], 0.25 * std::sqrt(pi / 2.0), 1e-9);  // k > 0
}

TEST(Reconstruction, LogNormalDividesByAdmissibilityConstant) {
    auto r = reconstruction_wavelet(log_normal_wavelet(1));
    EXPECT_NEAR(spectrum_value(r, 1.0), 1.0 / std::sqrt(pi / 2.0), 1e-10);
    EXPECT_NEAR(spectrum_value(r, -2.0), spectrum_value(log_normal_wavelet(1), 2.0) / std::sqrt(pi / 2.0), 1e-10);
}

TEST(Reconstruction, NormalizedLogNormalUsesQuarterPower) {
    auto n = normalized_wavelet(log_normal_wavelet(1));
    EXPECT_NEAR(spectrum_value(n, 1.0), std::pow(pi / 2.0, -0.25), 1e-10);
    EXPECT_NEAR(admissibility_profile(n).max_value, 1.0, 1e-9);
}

TEST(Reconstruction, UnitConstantWaveletIsItsOwnPartner) {
    auto g = normalized_wavelet(gaussian_derivative_wavelet(1, 3));
    auto r = reconstruction_wavelet(g);
    for (double k : {-3.0, -0.4, 0.2, 1.0, 2.7}) EXPECT_NEAR(spectrum_value(r, k), spectrum_value(g, k), 1e-9);
}

TEST(Reconstruction, CrossProfileIsOneInEveryDirection) {
    auto t = tabulated_wavelet(log_normal_wavelet(2), {1.0, 1.5, 0.8, 1.2});
    for (const auto& g : {log_normal_wavelet(1), gaussian_derivative_wavelet(2, 4), t}) {
        auto p = admissibility_profile(g, reconstruction_wavelet(g));
        EXPECT_NEAR(p.min_value, 1.0, 1e-6) << g.name();
        EXPECT_NEAR(p.max_value, 1.0, 1e-6) << g.name();
    }
}

TEST(Reconstruction, ZeroWaveletIsInadmissible) {
    auto z = tabulated_wavelet(log_normal_wavelet(1), {0.0, 1.0});
    try {
        reconstruction_wavelet(z);
        FAIL() << "expected inadmissible";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::inadmissible);
    }
}

TEST(MomentOrder, LogNormalIsFlat) { EXPECT_EQ(moment_decay_order(log_normal_wavelet(1), 10), 10); }

TEST(MomentOrder, MexicanHatFailsSecondOrder) { EXPECT_EQ(moment_decay_order(gaussian_derivative_wavelet(1, 2), 10), 1); }

TEST(MomentOrder, CappedByRequestedOrder) { EXPECT_EQ(moment_decay_order(gaussian_derivative_wavelet(1, 4), 3), 3); }

TEST(MomentOrder, MatchesVanishingOrderMinusOne) {
    for (int m = 1; m <= 6; ++m) EXPECT_EQ(moment_decay_order(gaussian_derivative_wavelet(2, m), 10), m - 1) << m;
}

TEST(Laplacian, MultipliesByMinusSquaredFrequency) {
    auto g = log_normal_wavelet(2);
    auto lg = laplacian_of(g);
    EXPECT_EQ(spectrum_value(lg, 0.0, 0.0), 0.0);
    EXPECT_NEAR(spectrum_value(lg, 1.0, 0.0), -1.0, 1e-15);
    EXPECT_NEAR(spectrum_value(lg, 0.3, 0.4), -0.25 * spectrum_value(g, 0.3, 0.4), 1e-15);
    EXPECT_TRUE(lg.is_radial());
}

TEST(Classification, RadialAndFlatness) {
    EXPECT_TRUE(log_normal_wavelet(1).in_s0());
    EXPECT_FALSE(gaussian_derivative_wavelet(1, 8).in_s0());
    EXPECT_FALSE(tabulated_wavelet(log_normal_wavelet(2), {1.0, 2.0}).is_radial());
    EXPECT_TRUE(tabulated_wavelet(log_normal_wavelet(2), {3.0}).is_radial());
}

TEST(Json, RoundTripPreservesSpectrum) {
    auto w = with_normalization(tabulated_wavelet(laplacian_of(gaussian_derivative_wavelet(2, 3)), {1.0, 2.0, 0.5}), 1.7);
    auto back = wavelet_from_json(to_json(w));
    EXPECT_EQ(to_json(back), to_json(w));
    for (double th = 0.1; th < 6.3; th += 0.7)
        EXPECT_DOUBLE_EQ(spectrum_value(back, 1.3 * std::cos(th), 1.3 * std::sin(th)),
                         spectrum_value(w, 1.3 * std::cos(th), 1.3 * std::sin(th)));
}

TEST(Json, UnknownKindIsConfigError) {
    try {
        wavelet_from_json({{"kind", "haar"}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::config);
    }
}

} // namespace
