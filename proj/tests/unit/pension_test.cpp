#include <cmath>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "buffersim/pension_system.hpp"

namespace buffersim {
namespace {

TEST(Demographics, SteadyState) {
    const auto d = DemographicSchedule::steady_state(0.3);
    EXPECT_DOUBLE_EQ(d.dr(0.0), 0.3);
    EXPECT_DOUBLE_EQ(d.dr(37.5), 0.3);
    EXPECT_DOUBLE_EQ(d.n_retirees(12.0), 30.0);
    EXPECT_DOUBLE_EQ(d.n_workers(12.0), 100.0);
}

TEST(Demographics, LinearRampThenFlat) {
    const auto d = DemographicSchedule::linear_ramp(0.3, 0.5, 40.0);
    EXPECT_DOUBLE_EQ(d.dr(0.0), 0.3);
    EXPECT_DOUBLE_EQ(d.dr(20.0), 0.4);
    EXPECT_DOUBLE_EQ(d.dr(40.0), 0.5);
    EXPECT_DOUBLE_EQ(d.dr(55.0), 0.5);
    EXPECT_NEAR(d.n_retirees(10.0), 35.0, 1e-12);
}

TEST(Demographics, CustomTableIsPiecewiseConstant) {
    const DemographicSchedule d(50.0, CustomTable{{0.0, 10.0, 20.0}, {0.3, 0.35, 0.45}});
    EXPECT_DOUBLE_EQ(d.dr(0.0), 0.3);
    EXPECT_DOUBLE_EQ(d.dr(9.999), 0.3);
    EXPECT_DOUBLE_EQ(d.dr(10.0), 0.35);
    EXPECT_DOUBLE_EQ(d.dr(100.0), 0.45);
    EXPECT_DOUBLE_EQ(d.n_retirees(15.0), 17.5);
}

TEST(Demographics, RejectsBadSchedules) {
    EXPECT_THROW(DemographicSchedule::steady_state(0.0), std::invalid_argument);
    EXPECT_THROW(DemographicSchedule::steady_state(0.3, -1.0), std::invalid_argument);
    EXPECT_THROW(DemographicSchedule::linear_ramp(0.3, 0.5, 0.0), std::invalid_argument);
    EXPECT_THROW(DemographicSchedule(1.0, CustomTable{{1.0}, {0.3}}), std::invalid_argument);
    EXPECT_THROW(DemographicSchedule(1.0, CustomTable{{0.0, 5.0, 5.0}, {0.3, 0.3, 0.3}}),
                 std::invalid_argument);
    EXPECT_THROW(DemographicSchedule(1.0, CustomTable{{0.0, 5.0}, {0.3}}), std::invalid_argument);
}

TEST(Pension, BaseCaseFlows) {
    const auto d = DemographicSchedule::steady_state(0.3);
    // 15% of a 39k wage over 100 workers; the floor shares it among 30 retirees.
    EXPECT_NEAR(contributions(0.0, 39.0, d, 0.15), 585.0, 1e-12);
    EXPECT_NEAR(min_pension(0.0, 39.0, d, 0.15), 19.5, 1e-12);
    const auto bb = DemographicSchedule::linear_ramp(0.3, 0.5, 40.0);
    EXPECT_NEAR(min_pension(40.0, 39.0, bb, 0.15), 11.7, 1e-12);
}

TEST(Pension, ParamValidation) {
    EXPECT_THROW((PensionParams{0.0, 0.0}.validate()), std::invalid_argument);
    EXPECT_THROW((PensionParams{1.0, 0.0}.validate()), std::invalid_argument);
    EXPECT_NO_THROW((PensionParams{0.15, -10.0}.validate()));
}

TEST(SustainabilityBound, ZeroStaysZero) {
    const std::vector<double> r(100, 0.05);
    for (double k : sustainability_bound_path(0.0, r, 0.1)) EXPECT_EQ(k, 0.0);
}

TEST(SustainabilityBound, GrowsAtTheShortRate) {
    std::vector<double> r(121);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = 0.02 + 0.01 * static_cast<double>(k) / 120.0;
    const double dt = 1.0 / 120.0;
    const auto path = sustainability_bound_path(-50.0, r, dt);
    // int_0^1 (0.02 + 0.01 t) dt = 0.025, which the trapezoid integrates exactly.
    EXPECT_NEAR(path.back(), -50.0 * std::exp(0.025), 1e-12);
    EXPECT_DOUBLE_EQ(sustainability_bound(-50.0, r, dt, 60), path[60]);
    EXPECT_THROW(sustainability_bound(-50.0, r, dt, 121), std::out_of_range);
}

}  // namespace
}  // namespace buffersim
