#include <gtest/gtest.h>

#include <random>

#include "vinesense/error.hpp"
#include "vinesense/irrigation.hpp"

using namespace vinesense;
using namespace vinesense::irrigation;
using phenology::Stage;

namespace {

WaterBalanceState at(double deficit) {
  WaterBalanceState s;
  s.block_id = "b1";
  s.date = make_date(2025, 7, 1);
  s.deficit_mm = deficit;
  return s;
}

}  // namespace

TEST(Balance, Examples) {
  EXPECT_NEAR(update_balance(at(0), 4.0, 0.7, 1.0, 0.0).deficit_mm, 2.8, 1e-12);
  EXPECT_EQ(update_balance(at(5), 0.0, 0.7, 100.0, 0.0).deficit_mm, 0.0);
  EXPECT_EQ(update_balance(at(10), 0.0, 0.7, 0.0, 10.0).deficit_mm, 0.0);
}

TEST(Balance, IrrigationRecordedAndExact) {
  const auto s = update_balance(at(30), 0.0, 0.5, 0.0, 12.5);
  EXPECT_EQ(s.deficit_mm, 17.5);
  ASSERT_TRUE(s.last_irrigation.has_value());
  EXPECT_EQ(s.last_irrigation->mm, 12.5);
  EXPECT_EQ(s.kc_current, 0.5);
}

TEST(Balance, NegativeInputsRejected) {
  EXPECT_THROW(update_balance(at(0), -1, 0.5, 0, 0), Error);
  EXPECT_THROW(update_balance(at(0), 1, 0.5, -1, 0), Error);
  EXPECT_THROW(update_balance(at(0), 1, 0.5, 0, -1), Error);
}

TEST(Balance, FoldEqualsStepwiseAndNeverNegative) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> et0(0, 8), kc(0, 0.8), rain(0, 20);
  std::bernoulli_distribution irrigate(0.1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<DailyWater> days;
    for (int i = 0; i < 40; ++i) {
      days.push_back({add_days(make_date(2025, 6, 1), i), et0(rng), kc(rng),
                      irrigate(rng) ? 0.0 : rain(rng), irrigate(rng) ? 15.0 : 0.0});
    }
    WaterBalanceState step = at(0);
    for (const auto& d : days) {
      step.date = d.date;
      step = update_balance(step, d.et0, d.kc, d.rain_mm, d.irrigation_mm);
      ASSERT_GE(step.deficit_mm, 0.0);
    }
    const auto folded = run_balance(at(0), days);
    EXPECT_EQ(folded, step);
  }
}

TEST(Recommend, Examples) {
  EXPECT_EQ(recommend(at(10), 0.0).action, Action::none_needed);
  const auto irr = recommend(at(30), 0.0, 25, 0.9);
  EXPECT_EQ(irr.action, Action::irrigate);
  EXPECT_NEAR(irr.amount_mm, 33.3, 0.1);
  const auto skip = recommend(at(30), 35.0);
  EXPECT_EQ(skip.action, Action::skip);
  EXPECT_EQ(skip.amount_mm, 0.0);
  EXPECT_NE(skip.reason.find("rainfall expected"), std::string::npos);
  EXPECT_EQ(irr.valid_until, make_date(2025, 7, 2));
}

TEST(Recommend, EfficiencyDomain) {
  EXPECT_THROW(recommend(at(30), 0, 25, 0.0), Error);
  EXPECT_THROW(recommend(at(30), 0, 25, 1.1), Error);
  EXPECT_NO_THROW(recommend(at(30), 0, 25, 1.0));
}

TEST(Recommend, NeverIrrigatesBelowThreshold) {
  for (double deficit = 0; deficit < 60; deficit += 0.25) {
    for (double rain : {0.0, 10.0, 40.0}) {
      const auto r = recommend(at(deficit), rain);
      if (deficit < 25) {
        EXPECT_NE(r.action, Action::irrigate);
      }
      EXPECT_EQ(r.amount_mm > 0.0, r.action == Action::irrigate);
    }
  }
}

TEST(Kc, DefaultTable) {
  EXPECT_EQ(kc_for_stage(Stage::dormancy), 0.0);
  EXPECT_EQ(kc_for_stage(Stage::bud_break), 0.3);
  EXPECT_EQ(kc_for_stage(Stage::flowering), 0.5);
  EXPECT_EQ(kc_for_stage(Stage::veraison), 0.7);
  EXPECT_EQ(kc_for_stage(Stage::harvest), 0.6);
  const KcTable custom({{Stage::dormancy, 0.0},
                       {Stage::bud_break, 0.2},
                       {Stage::flowering, 0.5},
                       {Stage::veraison, 0.8},
                       {Stage::harvest, 0.6}});
  EXPECT_EQ(custom(Stage::veraison), 0.8);
  EXPECT_THROW(KcTable({{Stage::veraison, 0.8}}), Error);
}

TEST(Projection, WhatIfCurve) {
  const std::vector<double> demand{3, 3, 3}, rain{0, 12, 0};
  const auto base = project_deficit(at(20), 0.0, demand, rain);
  EXPECT_EQ(base, (std::vector<double>{20, 23, 16, 19}));
  const auto full = project_deficit(at(20), 20.0, demand, rain);
  EXPECT_EQ(full.front(), 0.0);
  EXPECT_EQ(project_deficit(at(20), 50.0, demand, rain).front(), 0.0);
  EXPECT_THROW(project_deficit(at(20), -1.0, demand, rain), Error);
}
