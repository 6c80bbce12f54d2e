#include "echoaudit/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

#include "echoaudit/error.hpp"
#include "io_util.hpp"

namespace echoaudit {
namespace {

// Linear interpolation between closest ranks.
double quantile(std::vector<double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::string_view to_string(Cohort c) noexcept {
  switch (c) {
    case Cohort::following: return "following";
    case Cohort::ignoring: return "ignoring";
    case Cohort::unassigned: return "unassigned";
  }
  return "unassigned";
}

PvrTable compute_pvr(const PageViewIndex& page_views) {
  PvrTable table;
  for (const auto& [user, pvs] : page_views) {
    if (pvs.empty()) {
      ++table.excluded_users;
      continue;
    }
    PvrEntry e;
    e.total_pvs = pvs.size();
    e.clicked_pvs = static_cast<std::size_t>(
        std::count_if(pvs.begin(), pvs.end(), [](const PageView& pv) { return pv.any_clicked(); }));
    e.pvr = static_cast<double>(e.clicked_pvs) / static_cast<double>(e.total_pvs);
    table.entries.emplace(user, e);
  }
  return table;
}

CohortAssignment split_cohorts(const PvrTable& table, CohortThresholds thresholds) {
  if (!(thresholds.lo >= 0.0 && thresholds.hi <= 1.0 && thresholds.lo < thresholds.hi)) {
    throw ConfigError("cohort thresholds need 0 <= lo < hi <= 1");
  }
  CohortAssignment out;
  out.lo = thresholds.lo;
  out.hi = thresholds.hi;
  if (thresholds.percentile) {
    std::vector<double> pvrs;
    pvrs.reserve(table.entries.size());
    for (const auto& [_, e] : table.entries) pvrs.push_back(e.pvr);
    out.lo = quantile(pvrs, thresholds.lo);
    out.hi = quantile(pvrs, thresholds.hi);
  }
  for (const auto& [user, e] : table.entries) {
    if (e.pvr <= out.lo) {
      out.ignoring.insert(user);
    } else if (e.pvr >= out.hi) {
      out.following.insert(user);
    } else {
      out.unassigned.insert(user);
    }
  }
  return out;
}

Cohort CohortAssignment::cohort_of(std::string_view user) const {
  if (following.contains(user)) return Cohort::following;
  if (ignoring.contains(user)) return Cohort::ignoring;
  return Cohort::unassigned;
}

void write_cohorts_csv(const PvrTable& table, const CohortAssignment& cohorts, std::ostream& out) {
  out << "user_id,pvr,total_pvs,clicked_pvs,group\n";
  std::string row;
  for (const auto& [user, e] : table.entries) {
    row.clear();
    detail::append_csv_cell(row, user);
    row += ',' + detail::format_double(e.pvr) + ',' + std::to_string(e.total_pvs) + ',' +
           std::to_string(e.clicked_pvs) + ',' + std::string(to_string(cohorts.cohort_of(user))) + '\n';
    out << row;
  }
}

}  // namespace echoaudit
