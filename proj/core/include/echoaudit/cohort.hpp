#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <set>
#include <string>

#include "echoaudit/logmodel.hpp"

namespace echoaudit {

struct PvrEntry {
  double pvr = 0.0;  // clicked_pvs / total_pvs
  std::size_t total_pvs = 0;
  std::size_t clicked_pvs = 0;
};

struct PvrTable {
  std::map<std::string, PvrEntry, std::less<>> entries;
  /// Users present in the index with no page views; left out of `entries`.
  std::size_t excluded_users = 0;
};

/// A page view counts as clicked when at least one of its items was clicked.
PvrTable compute_pvr(const PageViewIndex& page_views);

struct CohortThresholds {
  double lo = 0.2;
  double hi = 0.8;
  /// Interpret lo/hi as population quantiles of PVR instead of PVR values.
  bool percentile = false;
};

enum class Cohort { following, ignoring, unassigned };

std::string_view to_string(Cohort c) noexcept;

struct CohortAssignment {
  std::set<std::string, std::less<>> following;
  std::set<std::string, std::less<>> ignoring;
  std::set<std::string, std::less<>> unassigned;
  double lo = 0.0;  // resolved PVR thresholds actually applied
  double hi = 0.0;

  Cohort cohort_of(std::string_view user) const;
};

/// Ignoring: pvr <= lo. Following: pvr >= hi. Everyone else is unassigned.
CohortAssignment split_cohorts(const PvrTable& table, CohortThresholds thresholds = {});

/// `user_id,pvr,total_pvs,clicked_pvs,group`
void write_cohorts_csv(const PvrTable& table, const CohortAssignment& cohorts, std::ostream& out);

}  // namespace echoaudit
