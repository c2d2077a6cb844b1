#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "shadowspec/example17.hpp"

namespace shadowspec {
namespace {

const double kW = 2.0 * std::numbers::sqrt2;

TEST(TruncatedEigenvector, SatisfiesEigenEquationInside) {
    const ShiftOperator s = eisenberg_hedlund_backward();
    const SupportedVector c = truncated_eigenvector(s, 1.0, 20);
    EXPECT_EQ(c[0], Complex(1.0));
    for (std::int64_t n = -20; n <= 20; ++n)
        EXPECT_NEAR(std::abs(c[n]), std::pow(kW, -std::abs(static_cast<double>(n))), 1e-12);
    const SupportedVector sc = s.apply(c);
    for (std::int64_t n = -19; n <= 19; ++n) EXPECT_LT(std::abs(sc[n] - c[n]), 1e-12);
}

TEST(TruncatedEigenvector, OffUnitEigenvalue) {
    const ShiftOperator s = eisenberg_hedlund_backward();
    const Complex lambda = std::polar(1.5, 0.3);
    const SupportedVector c = truncated_eigenvector(s, lambda, 30);
    const SupportedVector sc = s.apply(c);
    for (std::int64_t n = -29; n <= 29; ++n) EXPECT_LT(std::abs(sc[n] - lambda * c[n]), 1e-12);
}

class Example17 : public ::testing::Test {
protected:
    static void SetUpTestSuite() { report_ = new Example17Report(run_example17()); }
    static void TearDownTestSuite() {
        delete report_;
        report_ = nullptr;
    }
    static const Example17Report& report() { return *report_; }

private:
    static Example17Report* report_;
};

Example17Report* Example17::report_ = nullptr;

TEST_F(Example17, AnnulusRadii) {
    for (const auto* r : {&report().report_t, &report().report_s}) {
        ASSERT_TRUE(r->shift_spectra);
        EXPECT_NEAR(r->shift_spectra->annulus_inner, 1.0 / kW, 1e-12);
        EXPECT_NEAR(r->shift_spectra->annulus_outer, kW, 1e-12);
    }
}

TEST_F(Example17, VerdictTable) {
    const Verdicts t = report().report_t.verdicts;
    const Verdicts s = report().report_s.verdicts;
    EXPECT_TRUE(t.uniformly_expansive);
    EXPECT_FALSE(t.shadowing);
    EXPECT_FALSE(t.hyperbolic);
    EXPECT_TRUE(s.shadowing);
    EXPECT_FALSE(s.uniformly_expansive);
    EXPECT_FALSE(s.hyperbolic);
    EXPECT_TRUE(report().verdicts_match);
}

TEST_F(Example17, GainSweepDecreasesTowardOne) {
    const auto& sweep = report().gain_sweep;
    ASSERT_EQ(sweep.size(), 4u);
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        EXPECT_NEAR(sweep[i].gain.gain_measured, sweep[i].gain.gain_identity, 1e-8);
        if (i > 0) {
            EXPECT_LT(sweep[i].q, sweep[i - 1].q);
            EXPECT_LT(sweep[i].gain.gain_measured, sweep[i - 1].gain.gain_measured);
        }
    }
    EXPECT_LT(sweep.back().gain.gain_measured, 0.1);
}

TEST_F(Example17, OracleTrend) {
    const auto& trend = report().trend;
    ASSERT_EQ(trend.size(), 4u);
    double s_min = trend[0].epsilon_s, s_max = trend[0].epsilon_s;
    for (std::size_t i = 0; i < trend.size(); ++i) {
        s_min = std::min(s_min, trend[i].epsilon_s);
        s_max = std::max(s_max, trend[i].epsilon_s);
        if (i > 0) EXPECT_GT(trend[i].epsilon_t, trend[i - 1].epsilon_t);
    }
    EXPECT_LT(s_max / s_min, 2.0);
    EXPECT_GE(trend.back().epsilon_t / trend.front().epsilon_t, 4.0);
    EXPECT_NE(report().trend_note.find("not"), std::string::npos);
}

}  // namespace
}  // namespace shadowspec
