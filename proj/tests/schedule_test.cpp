#include "vstyle/schedule.hpp"

#include <gtest/gtest.h>

#include <vector>

namespace vstyle {
namespace {

TEST(MakeScheduleTest, DefaultParamsProduceDocumentedShape) {
    const GuidanceSchedule s = make_schedule({});
    EXPECT_EQ(s.steps, 8u);
    ASSERT_EQ(s.sigmas.size(), 9u);
    EXPECT_DOUBLE_EQ(s.sigmas[0], 1.0);
    EXPECT_DOUBLE_EQ(s.sigmas[4], 0.5);
    EXPECT_DOUBLE_EQ(s.sigmas[8], 0.0);

    EXPECT_EQ(s.ihc_end, 3u);
    const std::vector<double> lambda_want = {1.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    ASSERT_EQ(s.lambda.size(), 8u);
    for (std::size_t t = 0; t < 8; ++t) EXPECT_DOUBLE_EQ(s.lambda[t], lambda_want[t]);

    EXPECT_DOUBLE_EQ(s.xi.front(), 0.0);
    EXPECT_DOUBLE_EQ(s.xi.back(), 1.0);
    EXPECT_DOUBLE_EQ(s.xi[1], 1.0 / 7.0);

    EXPECT_DOUBLE_EQ(s.beta, 0.3);
    EXPECT_EQ(s.gamma_begin, 6u);
    EXPECT_DOUBLE_EQ(s.gamma[5], 0.0);
    EXPECT_DOUBLE_EQ(s.gamma[6], 0.2);
    EXPECT_DOUBLE_EQ(s.gamma[7], 0.2);
}

TEST(MakeScheduleTest, SigmaGridIsLinear) {
    ScheduleParams p;
    p.steps = 4;
    const GuidanceSchedule s = make_schedule(p);
    const std::vector<double> want = {1.0, 0.75, 0.5, 0.25, 0.0};
    ASSERT_EQ(s.sigmas.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_DOUBLE_EQ(s.sigmas[i], want[i]);
}

TEST(MakeScheduleTest, SingleStepDegenerates) {
    ScheduleParams p;
    p.steps = 1;
    const GuidanceSchedule s = make_schedule(p);
    EXPECT_EQ(s.sigmas, (std::vector<double>{1.0, 0.0}));
    EXPECT_EQ(s.xi, (std::vector<double>{1.0}));
    EXPECT_EQ(s.ihc_end, 0u);
    EXPECT_DOUBLE_EQ(s.lambda[0], 0.0);
    EXPECT_EQ(s.gamma_begin, 1u);
    EXPECT_DOUBLE_EQ(s.gamma[0], 0.0);
}

TEST(MakeScheduleTest, SingleStepCompensationWindowUsesStartValue) {
    ScheduleParams p;
    p.steps = 2;
    p.ihc_window_fraction = 0.5;
    p.lambda_start = 0.8;
    p.lambda_end = 0.2;
    const GuidanceSchedule s = make_schedule(p);
    EXPECT_EQ(s.ihc_end, 1u);
    EXPECT_DOUBLE_EQ(s.lambda[0], 0.8);
    EXPECT_DOUBLE_EQ(s.lambda[1], 0.0);
}

TEST(MakeScheduleTest, ConstantLambdaConfiguration) {
    ScheduleParams p;
    p.lambda_start = 1.0;
    p.lambda_end = 1.0;
    p.ihc_window_fraction = 1.0;
    const GuidanceSchedule s = make_schedule(p);
    EXPECT_EQ(s.ihc_end, s.steps);
    for (std::size_t t = 0; t < s.steps; ++t) EXPECT_DOUBLE_EQ(s.lambda[t], 1.0);
}

TEST(MakeScheduleTest, CollapseConfigurationValidates) {
    ScheduleParams p;
    p.beta = 0.0;
    p.gamma = 0.0;
    p.lambda_start = 0.0;
    p.lambda_end = 0.0;
    EXPECT_NO_THROW(make_schedule(p));
}

TEST(MakeScheduleTest, RejectsInvalidParams) {
    ScheduleParams p;
    p.steps = 0;
    EXPECT_THROW(make_schedule(p), ConfigError);
    p = {};
    p.beta = -0.1;
    EXPECT_THROW(make_schedule(p), ConfigError);
    p = {};
    p.gamma = -0.1;
    EXPECT_THROW(make_schedule(p), ConfigError);
    p = {};
    p.beta = 0.7;
    p.gamma = 0.4;
    EXPECT_THROW(make_schedule(p), ConfigError);
    p = {};
    p.lambda_start = 0.2;
    p.lambda_end = 0.5;
    EXPECT_THROW(make_schedule(p), ConfigError);
    p = {};
    p.lambda_start = -1.0;
    EXPECT_THROW(make_schedule(p), ConfigError);
    p = {};
    p.ihc_window_fraction = 1.5;
    EXPECT_THROW(make_schedule(p), ConfigError);
    p = {};
    p.gamma_window_fraction = -0.25;
    EXPECT_THROW(make_schedule(p), ConfigError);
}

TEST(ScheduleAccessorsTest, LambdaBeyondStepsIsZero) {
    const GuidanceSchedule s = make_schedule({});
    EXPECT_DOUBLE_EQ(s.lambda_at(0), 1.0);
    EXPECT_DOUBLE_EQ(s.lambda_at(100), 0.0);
}

TEST(ScheduleValidateTest, DetectsTampering) {
    GuidanceSchedule s = make_schedule({});
    s.sigmas[0] = 0.9;
    EXPECT_THROW(s.validate(), ConfigError);

    s = make_schedule({});
    s.sigmas[3] = s.sigmas[2];
    EXPECT_THROW(s.validate(), ConfigError);

    s = make_schedule({});
    s.lambda[5] = 0.3;  // outside the compensation window
    EXPECT_THROW(s.validate(), ConfigError);

    s = make_schedule({});
    s.lambda[1] = 2.0;  // increasing inside the window
    EXPECT_THROW(s.validate(), ConfigError);

    s = make_schedule({});
    s.gamma[0] = 0.2;  // before the gamma window
    EXPECT_THROW(s.validate(), ConfigError);

    s = make_schedule({});
    s.xi.back() = 0.5;
    EXPECT_THROW(s.validate(), ConfigError);

    s = make_schedule({});
    s.gamma[7] = 0.9;  // beta 0.3 + 0.9 > 1
    EXPECT_THROW(s.validate(), ConfigError);

    s = make_schedule({});
    s.lambda.pop_back();
    EXPECT_THROW(s.validate(), ConfigError);
}

}  // namespace
}  // namespace vstyle
