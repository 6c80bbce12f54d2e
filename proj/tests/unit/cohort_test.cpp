#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "echoaudit/cohort.hpp"
#include "echoaudit/error.hpp"
#include "fixtures.hpp"

using namespace echoaudit;

namespace {

PageViewIndex user_with(const std::string& user, int total, int clicked) {
  PageViewIndex idx;
  for (int p = 0; p < total; ++p) {
    PageView pv;
    pv.pv_id = user + std::to_string(p);
    pv.user_id = user;
    pv.start_time = p + 1;
    pv.items.push_back(PageItem{"a", 0, false});
    pv.items.push_back(PageItem{"b", 1, p < clicked});
    idx[user].push_back(pv);
  }
  return idx;
}

PvrTable table_of(const std::vector<double>& pvrs) {
  PvrTable t;
  for (std::size_t i = 0; i < pvrs.size(); ++i) {
    t.entries["u" + std::to_string(i)] = PvrEntry{pvrs[i], 100, static_cast<std::size_t>(pvrs[i] * 100)};
  }
  return t;
}

}  // namespace

TEST(ComputePvr, EightOfTen) {
  const auto t = compute_pvr(user_with("u", 10, 8));
  ASSERT_EQ(t.entries.size(), 1u);
  EXPECT_DOUBLE_EQ(t.entries.at("u").pvr, 0.8);
  EXPECT_EQ(t.entries.at("u").total_pvs, 10u);
  EXPECT_EQ(t.entries.at("u").clicked_pvs, 8u);
}

TEST(ComputePvr, AllClickedIsOne) { EXPECT_EQ(compute_pvr(user_with("u", 7, 7)).entries.at("u").pvr, 1.0); }

TEST(ComputePvr, UserWithoutPageViewsIsExcluded) {
  auto idx = user_with("u", 3, 1);
  idx["ghost"];
  const auto t = compute_pvr(idx);
  EXPECT_EQ(t.entries.size(), 1u);
  EXPECT_EQ(t.excluded_users, 1u);
}

TEST(ComputePvr, MatchesRecountOnRandomFixture) {
  std::mt19937_64 rng(3);
  std::vector<InteractionRecord> records;
  for (int p = 0; p < 50; ++p) {
    const std::string user = "u" + std::to_string(rng() % 4);
    const int n = 1 + static_cast<int>(rng() % 5);
    for (int i = 0; i < n; ++i) {
      records.push_back(fixtures::browse(p + 1, "pv" + std::to_string(p), user, "i", static_cast<std::uint32_t>(i),
                                         rng() % 6 == 0));
    }
  }
  std::map<std::string, std::pair<std::set<std::string>, std::set<std::string>>> oracle;
  for (const auto& r : records) {
    oracle[r.user_id].first.insert(r.pv_id);
    if (*r.clicked) oracle[r.user_id].second.insert(r.pv_id);
  }
  const auto t = compute_pvr(group_page_views(records));
  ASSERT_EQ(t.entries.size(), oracle.size());
  for (const auto& [user, sets] : oracle) {
    const auto& e = t.entries.at(user);
    EXPECT_EQ(e.total_pvs, sets.first.size());
    EXPECT_EQ(e.clicked_pvs, sets.second.size());
    EXPECT_DOUBLE_EQ(e.pvr, static_cast<double>(sets.second.size()) / static_cast<double>(sets.first.size()));
  }
}

TEST(SplitCohorts, ThreeUsers) {
  const auto c = split_cohorts(table_of({0.1, 0.5, 0.9}));
  EXPECT_EQ(c.ignoring, (std::set<std::string, std::less<>>{"u0"}));
  EXPECT_EQ(c.unassigned, (std::set<std::string, std::less<>>{"u1"}));
  EXPECT_EQ(c.following, (std::set<std::string, std::less<>>{"u2"}));
  EXPECT_EQ(c.cohort_of("u0"), Cohort::ignoring);
  EXPECT_EQ(c.cohort_of("u2"), Cohort::following);
  EXPECT_EQ(c.cohort_of("nobody"), Cohort::unassigned);
}

TEST(SplitCohorts, BoundariesAreInclusive) {
  const auto c = split_cohorts(table_of({0.2, 0.8}));
  EXPECT_TRUE(c.ignoring.contains("u0"));
  EXPECT_TRUE(c.following.contains("u1"));
}

TEST(SplitCohorts, InvalidThresholdsAreConfigErrors) {
  EXPECT_THROW(split_cohorts(table_of({0.5}), {0.8, 0.2}), ConfigError);
  EXPECT_THROW(split_cohorts(table_of({0.5}), {0.5, 0.5}), ConfigError);
  EXPECT_THROW(split_cohorts(table_of({0.5}), {-0.1, 0.5}), ConfigError);
  EXPECT_THROW(split_cohorts(table_of({0.5}), {0.1, 1.5}), ConfigError);
}

TEST(SplitCohorts, MatchesBruteForceFilter) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> pvrs(1000);
  for (auto& p : pvrs) p = u(rng);
  const auto c = split_cohorts(table_of(pvrs));
  std::size_t lo = 0;
  std::size_t hi = 0;
  for (double p : pvrs) {
    lo += p <= 0.2;
    hi += p >= 0.8;
  }
  EXPECT_EQ(c.ignoring.size(), lo);
  EXPECT_EQ(c.following.size(), hi);
  EXPECT_EQ(c.unassigned.size(), 1000 - lo - hi);
}

TEST(SplitCohorts, WideningThresholdsOnlyGrowsCohorts) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> pvrs(300);
  for (auto& p : pvrs) p = u(rng);
  const auto t = table_of(pvrs);
  const auto narrow = split_cohorts(t, {0.1, 0.9});
  const auto wide = split_cohorts(t, {0.3, 0.7});
  for (const auto& id : narrow.following) EXPECT_TRUE(wide.following.contains(id));
  for (const auto& id : narrow.ignoring) EXPECT_TRUE(wide.ignoring.contains(id));
}

TEST(SplitCohorts, PercentileMode) {
  std::vector<double> pvrs;
  for (int i = 0; i <= 100; ++i) pvrs.push_back(i / 100.0);
  const auto c = split_cohorts(table_of(pvrs), {0.1, 0.9, true});
  EXPECT_NEAR(c.lo, 0.1, 1e-12);
  EXPECT_NEAR(c.hi, 0.9, 1e-12);
  EXPECT_EQ(c.ignoring.size(), 11u);
  EXPECT_EQ(c.following.size(), 11u);
}

TEST(CohortsCsv, Layout) {
  const auto t = table_of({0.1, 0.9});
  const auto c = split_cohorts(t);
  std::ostringstream out;
  write_cohorts_csv(t, c, out);
  EXPECT_EQ(out.str(), "user_id,pvr,total_pvs,clicked_pvs,group\nu0,0.1,100,10,ignoring\nu1,0.9,100,90,following\n");
}
