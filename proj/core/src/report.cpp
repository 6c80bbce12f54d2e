#include "echoaudit/report.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "echoaudit/error.hpp"
#include "io_util.hpp"

namespace echoaudit {
namespace {

using Json = nlohmann::ordered_json;

Json num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double to_num(const Json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw ArgumentError("report: bad number '" + s + "'");
  }
  return j.get<double>();
}

Json nums(const std::vector<double>& v) {
  Json out = Json::array();
  for (double x : v) out.push_back(num(x));
  return out;
}

std::vector<double> to_nums(const Json& j) {
  std::vector<double> out;
  for (const auto& x : j) out.push_back(to_num(x));
  return out;
}

Json to_json(const BlockComparison& t) {
  Json j;
  j["rows"] = Json::array();
  for (const auto& r : t.rows) {
    Json jr;
    jr["group"] = r.group;
    jr["amount"] = r.amount;
    jr["sample_size"] = r.sample_size;
    jr["first_mean"] = num(r.first_mean);
    jr["last_mean"] = num(r.last_mean);
    jr["within_p"] = num(r.within_p);
    jr["first_values"] = nums(r.first_values);
    jr["last_values"] = nums(r.last_values);
    j["rows"].push_back(std::move(jr));
  }
  j["between_first_p"] = num(t.between_first_p);
  j["between_last_p"] = num(t.between_last_p);
  return j;
}

BlockComparison block_comparison_from(const Json& j) {
  BlockComparison t;
  for (const auto& jr : j.at("rows")) {
    BlockComparisonRow r;
    r.group = jr.at("group").get<std::string>();
    r.amount = jr.at("amount").get<std::size_t>();
    r.sample_size = jr.at("sample_size").get<std::size_t>();
    r.first_mean = to_num(jr.at("first_mean"));
    r.last_mean = to_num(jr.at("last_mean"));
    r.within_p = to_num(jr.at("within_p"));
    r.first_values = to_nums(jr.at("first_values"));
    r.last_values = to_nums(jr.at("last_values"));
    t.rows.push_back(std::move(r));
  }
  t.between_first_p = to_num(j.at("between_first_p"));
  t.between_last_p = to_num(j.at("between_last_p"));
  return t;
}

Json to_json(const BicSelection& b) {
  Json j;
  j["k_star"] = b.k_star;
  j["curve"] = Json::array();
  for (const auto& [k, v] : b.curve) j["curve"].push_back(Json{{"k", k}, {"value", num(v)}});
  return j;
}

BicSelection bic_from(const Json& j) {
  BicSelection b;
  b.k_star = j.at("k_star").get<std::size_t>();
  for (const auto& p : j.at("curve")) b.curve.emplace_back(p.at("k").get<std::size_t>(), to_num(p.at("value")));
  return b;
}

Json to_json(const OffsetRow& r) {
  Json j;
  j["label"] = r.label;
  j["offset"] = r.offset;
  j["k_following"] = r.k_following;
  j["k_ignoring"] = r.k_ignoring;
  j["following_mean"] = num(r.following_mean);
  j["ignoring_mean"] = num(r.ignoring_mean);
  j["p_value"] = num(r.p_value);
  j["following_values"] = nums(r.following_values);
  j["ignoring_values"] = nums(r.ignoring_values);
  return j;
}

OffsetRow offset_row_from(const Json& j) {
  OffsetRow r;
  r.label = j.at("label").get<std::string>();
  r.offset = j.at("offset").get<int>();
  r.k_following = j.at("k_following").get<std::size_t>();
  r.k_ignoring = j.at("k_ignoring").get<std::size_t>();
  r.following_mean = to_num(j.at("following_mean"));
  r.ignoring_mean = to_num(j.at("ignoring_mean"));
  r.p_value = to_num(j.at("p_value"));
  r.following_values = to_nums(j.at("following_values"));
  r.ignoring_values = to_nums(j.at("ignoring_values"));
  return r;
}

Json to_json(const IndexTable& t) {
  Json j;
  j["rows"] = Json::array();
  for (const auto& r : t.rows) j["rows"].push_back(to_json(r));
  j["average"] = to_json(t.average);
  return j;
}

IndexTable index_table_from(const Json& j) {
  IndexTable t;
  for (const auto& r : j.at("rows")) t.rows.push_back(offset_row_from(r));
  t.average = offset_row_from(j.at("average"));
  return t;
}

Json to_json(const ReinforcementSection& s) {
  Json j;
  j["k_star_following"] = s.k_star_following;
  j["k_star_ignoring"] = s.k_star_ignoring;
  j["sample_size"] = s.sample_size;
  j["ch_drop"] = to_json(s.ch_drop);
  j["ari"] = to_json(s.ari);
  j["warnings"] = s.warnings;
  return j;
}

ReinforcementSection reinforcement_from(const Json& j) {
  ReinforcementSection s;
  s.k_star_following = j.at("k_star_following").get<std::size_t>();
  s.k_star_ignoring = j.at("k_star_ignoring").get<std::size_t>();
  s.sample_size = j.at("sample_size").get<std::size_t>();
  s.ch_drop = index_table_from(j.at("ch_drop"));
  s.ari = index_table_from(j.at("ari"));
  s.warnings = j.at("warnings").get<std::vector<std::string>>();
  return s;
}

std::string fixed4(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string sci4(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4e", v);
  return buf;
}

std::string csv_num(double v) { return detail::format_double(v); }

std::string group_label(std::string_view g) {
  if (g == "all") return "All users";
  if (g == "following") return "Following";
  if (g == "ignoring") return "Ignoring";
  return std::string(g);
}

void markdown_block_table(std::string& md, const BlockComparison& t) {
  md += "| User type | Amount | Sample | First block | Last block | P-value |\n";
  md += "|---|---:|---:|---:|---:|---:|\n";
  for (const auto& r : t.rows) {
    md += "| " + group_label(r.group) + " | " + std::to_string(r.amount) + " | " +
          std::to_string(r.sample_size) + " | " + fixed4(r.first_mean) + " | " + fixed4(r.last_mean) +
          " | " + sci4(r.within_p) + " |\n";
  }
  md += "| P-value (Following vs Ignoring) | | | " + sci4(t.between_first_p) + " | " +
        sci4(t.between_last_p) + " | |\n";
}

void markdown_index_table(std::string& md, const IndexTable& t) {
  md += "| k offset | k (F / I) | Following | Ignoring | P-value |\n";
  md += "|---|---|---:|---:|---:|\n";
  for (const auto& r : t.rows) {
    md += "| " + r.label + " | " + std::to_string(r.k_following) + " / " + std::to_string(r.k_ignoring) +
          " | " + fixed4(r.following_mean) + " | " + fixed4(r.ignoring_mean) + " | " + sci4(r.p_value) +
          " |\n";
  }
  const auto& a = t.average;
  md += "| AVE | | " + fixed4(a.following_mean) + " | " + fixed4(a.ignoring_mean) + " | " + sci4(a.p_value) +
        " |\n";
}

std::string suffixed(std::string_view stem, std::string_view kind) {
  std::string s(stem);
  if (kind != "click") s += "_" + std::string(kind);
  return s + ".csv";
}

}  // namespace

bool ExperimentReport::complete() const noexcept {
  if (diversity_error) return false;
  for (const auto& c : campaigns) {
    if (c.error) return false;
  }
  return true;
}

std::string report_to_json(const ExperimentReport& r) {
  Json j;
  j["master_seed"] = r.master_seed;
  j["repetitions"] = r.repetitions;
  j["p_fraction_default"] = num(r.p_fraction_default);
  j["p_fraction_hopkins"] = num(r.p_fraction_hopkins);
  j["sample_size_rule"] = "floor";
  if (r.cohorts) {
    const auto& c = *r.cohorts;
    j["cohorts"] = Json{{"following", c.following}, {"ignoring", c.ignoring}, {"unassigned", c.unassigned},
                        {"excluded", c.excluded}, {"lo", num(c.lo)}, {"hi", num(c.hi)}};
  }
  j["campaigns"] = Json::array();
  for (const auto& c : r.campaigns) {
    Json jc;
    jc["kind"] = c.kind;
    jc["following_users"] = c.following_users;
    jc["ignoring_users"] = c.ignoring_users;
    if (c.bic_following) jc["bic_following"] = to_json(*c.bic_following);
    if (c.bic_ignoring) jc["bic_ignoring"] = to_json(*c.bic_ignoring);
    if (c.tendency) jc["tendency"] = to_json(*c.tendency);
    if (c.reinforcement) {
      jc["reinforcement"] = to_json(*c.reinforcement);
      jc["decision"] = decision_line(c);
    }
    if (c.error) jc["error"] = *c.error;
    j["campaigns"].push_back(std::move(jc));
  }
  if (r.diversity) j["diversity"] = to_json(*r.diversity);
  if (r.diversity_error) j["diversity_error"] = *r.diversity_error;
  return j.dump(2) + "\n";
}

ExperimentReport report_from_json(std::string_view text) {
  const auto j = Json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ArgumentError("report: not a JSON object");
  ExperimentReport r;
  try {
    r.master_seed = j.at("master_seed").get<std::uint64_t>();
    r.repetitions = j.at("repetitions").get<std::size_t>();
    r.p_fraction_default = to_num(j.at("p_fraction_default"));
    r.p_fraction_hopkins = to_num(j.at("p_fraction_hopkins"));
    if (j.contains("cohorts")) {
      const auto& c = j["cohorts"];
      r.cohorts = CohortSummary{c.at("following").get<std::size_t>(), c.at("ignoring").get<std::size_t>(),
                                c.at("unassigned").get<std::size_t>(), c.at("excluded").get<std::size_t>(),
                                to_num(c.at("lo")), to_num(c.at("hi"))};
    }
    for (const auto& jc : j.at("campaigns")) {
      CampaignReport c;
      c.kind = jc.at("kind").get<std::string>();
      c.following_users = jc.at("following_users").get<std::size_t>();
      c.ignoring_users = jc.at("ignoring_users").get<std::size_t>();
      if (jc.contains("bic_following")) c.bic_following = bic_from(jc["bic_following"]);
      if (jc.contains("bic_ignoring")) c.bic_ignoring = bic_from(jc["bic_ignoring"]);
      if (jc.contains("tendency")) c.tendency = block_comparison_from(jc["tendency"]);
      if (jc.contains("reinforcement")) c.reinforcement = reinforcement_from(jc["reinforcement"]);
      if (jc.contains("error")) c.error = jc["error"].get<std::string>();
      r.campaigns.push_back(std::move(c));
    }
    if (j.contains("diversity")) r.diversity = block_comparison_from(j["diversity"]);
    if (j.contains("diversity_error")) r.diversity_error = j["diversity_error"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("report: ") + e.what());
  }
  return r;
}

bool reinforcement_detected(const CampaignReport& c, double alpha) {
  if (!c.reinforcement) return false;
  const auto& ch = c.reinforcement->ch_drop.average;
  const auto& ari = c.reinforcement->ari.average;
  return ch.following_mean < ch.ignoring_mean && ch.p_value < alpha && ari.following_mean > ari.ignoring_mean &&
         ari.p_value < alpha;
}

std::string decision_line(const CampaignReport& c) {
  return std::string("reinforcement: ") + (reinforcement_detected(c) ? "detected" : "not detected") + " (" +
         c.kind + ")";
}

std::string block_comparison_csv(const BlockComparison& t) {
  std::string out = "user_type,amount,first_block,last_block,p_value\n";
  for (const auto& r : t.rows) {
    out += r.group + "," + std::to_string(r.amount) + "," + csv_num(r.first_mean) + "," + csv_num(r.last_mean) +
           "," + csv_num(r.within_p) + "\n";
  }
  out += "between_groups,," + csv_num(t.between_first_p) + "," + csv_num(t.between_last_p) + ",\n";
  return out;
}

std::string index_table_csv(const IndexTable& t) {
  std::string out = "k_offset,following,ignoring,p_value\n";
  for (const auto& r : t.rows) {
    out += r.label + "," + csv_num(r.following_mean) + "," + csv_num(r.ignoring_mean) + "," + csv_num(r.p_value) +
           "\n";
  }
  const auto& a = t.average;
  out += "AVE," + csv_num(a.following_mean) + "," + csv_num(a.ignoring_mean) + "," + csv_num(a.p_value) + "\n";
  return out;
}

std::string bic_curve_csv(const BicSelection& b) {
  std::string out = "k,value\n";
  for (const auto& [k, v] : b.curve) out += std::to_string(k) + "," + csv_num(v) + "\n";
  return out;
}

std::string render_markdown(const ExperimentReport& r) {
  std::string md = "# Echo chamber audit\n\n";
  md += "- master seed: " + std::to_string(r.master_seed) + "\n";
  md += "- repetitions: " + std::to_string(r.repetitions) + "\n";
  md += "- p-sample fraction: " + fixed4(r.p_fraction_default) + " (Hopkins: " + fixed4(r.p_fraction_hopkins) +
        ")\n";
  md += "- sample sizes use floor(fraction * n); 2452 users at 0.8 give 1961 (round-half-up would give 1962)\n";
  if (r.cohorts) {
    const auto& c = *r.cohorts;
    md += "- cohorts: " + std::to_string(c.following) + " following (pvr >= " + fixed4(c.hi) + "), " +
          std::to_string(c.ignoring) + " ignoring (pvr <= " + fixed4(c.lo) + "), " + std::to_string(c.unassigned) +
          " unassigned, " + std::to_string(c.excluded) + " without page views\n";
  }

  for (const auto& c : r.campaigns) {
    md += "\n## " + c.kind + " campaign\n\n";
    md += "Eligible users: " + std::to_string(c.following_users) + " following, " +
          std::to_string(c.ignoring_users) + " ignoring.\n";
    if (c.tendency) {
      md += "\n### Hopkins statistic\n\n";
      markdown_block_table(md, *c.tendency);
    }
    if (c.bic_following && c.bic_ignoring) {
      md += "\nK* by BIC: following " + std::to_string(c.bic_following->k_star) + ", ignoring " +
            std::to_string(c.bic_ignoring->k_star) + ".\n";
    }
    if (c.reinforcement) {
      md += "\n### Decrease in Calinski-Harabasz score\n\n";
      markdown_index_table(md, c.reinforcement->ch_drop);
      md += "\n### Adjusted Rand index, first vs last block\n\n";
      markdown_index_table(md, c.reinforcement->ari);
      for (const auto& w : c.reinforcement->warnings) md += "\n> warning: " + w + "\n";
    }
    if (c.error) md += "\n> campaign aborted: " + *c.error + "\n";
  }

  if (r.diversity) {
    md += "\n## Content diversity of recommended items\n\n";
    markdown_block_table(md, *r.diversity);
  }
  if (r.diversity_error) md += "\n> diversity aborted: " + *r.diversity_error + "\n";

  std::string decisions;
  for (const auto& c : r.campaigns) {
    if (c.reinforcement) decisions += "- " + decision_line(c) + "\n";
  }
  if (!decisions.empty()) md += "\n## Decisions\n\n" + decisions;
  return md;
}

void write_report_files(const ExperimentReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& c : r.campaigns) {
    if (c.tendency) detail::write_file_atomic(dir / suffixed("hopkins", c.kind), block_comparison_csv(*c.tendency));
    if (c.bic_following) {
      detail::write_file_atomic(dir / suffixed("bic_curve_following", c.kind), bic_curve_csv(*c.bic_following));
    }
    if (c.bic_ignoring) {
      detail::write_file_atomic(dir / suffixed("bic_curve_ignoring", c.kind), bic_curve_csv(*c.bic_ignoring));
    }
    if (c.reinforcement) {
      detail::write_file_atomic(dir / suffixed("ch_drop", c.kind), index_table_csv(c.reinforcement->ch_drop));
      detail::write_file_atomic(dir / suffixed("ari", c.kind), index_table_csv(c.reinforcement->ari));
    }
  }
  if (r.diversity) detail::write_file_atomic(dir / "diversity.csv", block_comparison_csv(*r.diversity));
  detail::write_file_atomic(dir / "summary.md", render_markdown(r));
  detail::write_file_atomic(dir / "report.json", report_to_json(r));
}

}  // namespace echoaudit
