#include "echoaudit/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#include <json.hpp>

#include "echoaudit/error.hpp"
#include "io_util.hpp"

namespace echoaudit {
namespace {

LogFormat format_for(const RunConfig& c, const std::filesystem::path& p) {
  if (c.log_format) return *c.log_format;
  const auto ext = p.extension().string();
  return ext == ".jsonl" || ext == ".json" ? LogFormat::jsonl : LogFormat::csv;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

template <class Fn>
auto stage(const std::string& name, const ProgressFn& progress, Fn&& fn) {
  if (progress) progress(name);
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::vector<std::string> intersect(const std::set<std::string, std::less<>>& a,
                                   const std::set<std::string, std::less<>>& b) {
  std::vector<std::string> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace

void RunConfig::validate(bool check_files) const {
  auto fail = [](const std::string& what) { throw ConfigError("run config: " + what); };
  if (browse_log.empty()) fail("browse_log is required");
  if (click_log.empty()) fail("click_log is required");
  if (embeddings.empty()) fail("embeddings is required");
  if (block_sizes.browse == 0 || block_sizes.click == 0 || block_sizes.purchase == 0) {
    fail("block sizes must be positive");
  }
  if (!(thresholds.lo >= 0.0 && thresholds.lo < thresholds.hi && thresholds.hi <= 1.0)) {
    fail("cohort thresholds need 0 <= lo < hi <= 1");
  }
  if (min_blocks < 2) fail("min_blocks must be >= 2");
  try {
    plan.validate();
  } catch (const ConfigError& e) {
    fail(e.what());
  }
  if (k_min < 2 || k_max < k_min) fail("need 2 <= k_min <= k_max");
  if (std::find(campaigns.begin(), campaigns.end(), InteractionKind::browse) != campaigns.end()) {
    fail("campaigns may list click and purchase only");
  }
  const bool wants_purchase =
      std::find(campaigns.begin(), campaigns.end(), InteractionKind::purchase) != campaigns.end();
  if (wants_purchase && purchase_log.empty()) fail("purchase campaign requested without purchase_log");
  if (output_dir.empty()) fail("output directory is required");
  if (check_files) {
    for (const auto* p : {&browse_log, &click_log, &embeddings}) {
      if (!std::filesystem::exists(*p)) fail("file not found: " + p->string());
    }
    if (wants_purchase && !std::filesystem::exists(purchase_log)) {
      fail("file not found: " + purchase_log.string());
    }
  }
}

RunConfig run_config_from_json(std::string_view text, const std::filesystem::path& base_dir) {
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError("run config is not a JSON object");
  RunConfig c;
  bool campaigns_given = false;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const auto& k = it.key();
      const auto& v = it.value();
      if (k == "browse_log") c.browse_log = resolve(base_dir, v.get<std::string>());
      else if (k == "click_log") c.click_log = resolve(base_dir, v.get<std::string>());
      else if (k == "purchase_log") c.purchase_log = resolve(base_dir, v.get<std::string>());
      else if (k == "embeddings") c.embeddings = resolve(base_dir, v.get<std::string>());
      else if (k == "log_format") c.log_format = parse_format(v.get<std::string>());
      else if (k == "lenient") c.lenient = v.get<bool>();
      else if (k == "browse_block_size") c.block_sizes.browse = v.get<std::size_t>();
      else if (k == "click_block_size") c.block_sizes.click = v.get<std::size_t>();
      else if (k == "purchase_block_size") c.block_sizes.purchase = v.get<std::size_t>();
      else if (k == "cohort_lo") c.thresholds.lo = v.get<double>();
      else if (k == "cohort_hi") c.thresholds.hi = v.get<double>();
      else if (k == "cohort_percentile") c.thresholds.percentile = v.get<bool>();
      else if (k == "min_blocks") c.min_blocks = v.get<std::size_t>();
      else if (k == "trim_before") {
        if (!v.is_null()) c.trim_before = v.get<std::int64_t>();
      } else if (k == "missing_items") {
        const auto s = v.get<std::string>();
        if (s == "error") c.missing_items = MissingPolicy::error;
        else if (s == "skip") c.missing_items = MissingPolicy::skip;
        else throw ConfigError("missing_items must be error or skip");
      } else if (k == "repetitions") c.plan.repetitions = v.get<std::size_t>();
      else if (k == "p_fraction") c.plan.p_fraction_default = v.get<double>();
      else if (k == "p_fraction_hopkins") c.plan.p_fraction_hopkins = v.get<double>();
      else if (k == "seed") c.plan.master_seed = v.get<std::uint64_t>();
      else if (k == "k_window") c.k_window = v.get<std::size_t>();
      else if (k == "k_min") c.k_min = v.get<std::size_t>();
      else if (k == "k_max") c.k_max = v.get<std::size_t>();
      else if (k == "bic_variant") {
        const auto s = v.get<std::string>();
        if (s == "paper") c.bic.variant = BicVariant::paper;
        else if (s == "xmeans") c.bic.variant = BicVariant::xmeans;
        else throw ConfigError("bic_variant must be paper or xmeans");
      } else if (k == "bic_squared_norm") c.bic.squared_norm = v.get<bool>();
      else if (k == "k_selection") {
        const auto s = v.get<std::string>();
        if (s == "global_max") c.k_selection = KSelection::global_max;
        else if (s == "first_decisive_local_max") c.k_selection = KSelection::first_decisive_local_max;
        else throw ConfigError("k_selection must be global_max or first_decisive_local_max");
      } else if (k == "ch_variant") {
        const auto s = v.get<std::string>();
        if (s == "unweighted") c.ch_variant = ChVariant::unweighted;
        else if (s == "size_weighted") c.ch_variant = ChVariant::size_weighted;
        else throw ConfigError("ch_variant must be unweighted or size_weighted");
      } else if (k == "campaigns") {
        campaigns_given = true;
        c.campaigns.clear();
        for (const auto& s : v) c.campaigns.push_back(parse_kind(s.get<std::string>()));
      } else if (k == "diversity") c.diversity = v.get<bool>();
      else if (k == "threads") c.threads = v.get<unsigned>();
      else if (k == "out") c.output_dir = resolve(base_dir, v.get<std::string>());
      else throw ConfigError("run config: unknown key '" + k + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  if (!campaigns_given && c.purchase_log.empty()) c.campaigns = {InteractionKind::click};
  return c;
}

unsigned effective_threads(unsigned requested) {
  unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("ECHO_AUDIT_THREADS"); env && *env) {
    unsigned cap = 0;
    if (!detail::parse_integer(std::string_view(env), cap) || cap == 0) {
      throw ConfigError("ECHO_AUDIT_THREADS must be a positive integer");
    }
    n = std::min(n, cap);
  }
  return std::max(1u, n);
}

ExperimentReport run_pipeline(const RunConfig& config, const ProgressFn& progress) {
  config.validate(false);
  const unsigned threads = effective_threads(config.threads);
  const ParseOptions parse_options{config.lenient};
  const bool wants_purchase = std::find(config.campaigns.begin(), config.campaigns.end(),
                                        InteractionKind::purchase) != config.campaigns.end();

  // Every input must exist before any stage runs.
  auto require = [](const std::string& stage_name, const std::filesystem::path& p) {
    if (!std::filesystem::exists(p)) throw StageError(stage_name, "file not found: " + p.string());
  };
  require("ingest/browse", config.browse_log);
  require("ingest/click", config.click_log);
  if (wants_purchase) require("ingest/purchase", config.purchase_log);
  require("embed/load", config.embeddings);

  auto ingest = [&](InteractionKind kind, const std::filesystem::path& path) {
    return stage("ingest/" + std::string(to_string(kind)), progress, [&] {
      return parse_log_file(kind, path.string(), format_for(config, path), parse_options).records;
    });
  };
  const auto browse = ingest(InteractionKind::browse, config.browse_log);
  const auto click = ingest(InteractionKind::click, config.click_log);
  std::vector<InteractionRecord> purchase;
  if (wants_purchase) purchase = ingest(InteractionKind::purchase, config.purchase_log);

  const auto [pvr, cohorts] = stage("cohort", progress, [&] {
    auto table = compute_pvr(group_page_views(browse));
    auto split = split_cohorts(table, config.thresholds);
    return std::pair{std::move(table), std::move(split)};
  });

  const auto table = stage("embed/load", progress, [&] { return load_embedding_table_file(config.embeddings.string()); });

  ExperimentReport report;
  report.master_seed = config.plan.master_seed;
  report.repetitions = config.plan.repetitions;
  report.p_fraction_default = config.plan.p_fraction_default;
  report.p_fraction_hopkins = config.plan.p_fraction_hopkins;
  report.cohorts = CohortSummary{cohorts.following.size(), cohorts.ignoring.size(), cohorts.unassigned.size(),
                                 pvr.excluded_users, cohorts.lo, cohorts.hi};

  CampaignOptions campaign_options;
  campaign_options.threads = threads;
  campaign_options.ch_variant = config.ch_variant;
  KSelectionOptions k_options;
  k_options.k_min = config.k_min;
  k_options.k_max = config.k_max;
  k_options.select.bic = config.bic;
  k_options.select.strategy = config.k_selection;
  k_options.select.threads = threads;

  for (const auto kind : config.campaigns) {
    const std::string name(to_string(kind));
    CampaignReport campaign;
    campaign.kind = name;
    try {
      const auto& records = kind == InteractionKind::click ? click : purchase;
      const auto blocks = stage("blocks/" + name, progress, [&] {
        return blocks_by_user(records, kind, config.block_sizes.for_kind(kind), config.trim_before);
      });
      const auto eligible = stage("eligibility/" + name, progress,
                                  [&] { return filter_eligible(blocks, config.min_blocks); });
      const auto groups = stage("embed/" + name, progress, [&] {
        CampaignGroups g;
        g.following = build_group_embeddings(intersect(cohorts.following, eligible), blocks, table,
                                             config.missing_items);
        g.ignoring = build_group_embeddings(intersect(cohorts.ignoring, eligible), blocks, table,
                                            config.missing_items);
        if (g.following.size() < 2 || g.ignoring.size() < 2) {
          throw ArgumentError("need at least 2 eligible users per cohort (following " +
                              std::to_string(g.following.size()) + ", ignoring " +
                              std::to_string(g.ignoring.size()) + ")");
        }
        return g;
      });
      campaign.following_users = groups.following.size();
      campaign.ignoring_users = groups.ignoring.size();
      campaign.tendency = stage("tendency/" + name, progress,
                                [&] { return run_tendency(groups, config.plan, campaign_options); });
      campaign.bic_following = stage("bic/" + name, progress,
                                     [&] { return run_k_selection(groups, "following", config.plan, k_options); });
      campaign.bic_ignoring = stage("bic/" + name, progress,
                                    [&] { return run_k_selection(groups, "ignoring", config.plan, k_options); });
      campaign.reinforcement = stage("reinforcement/" + name, progress, [&] {
        return run_reinforcement(groups, config.plan, campaign.bic_following->k_star,
                                 campaign.bic_ignoring->k_star, config.k_window, campaign_options);
      });
    } catch (const StageError& e) {
      campaign.error = e.what();
    }
    report.campaigns.push_back(std::move(campaign));
    write_report_files(report, config.output_dir);
  }

  if (config.diversity) {
    try {
      report.diversity = stage("diversity", progress, [&] {
        const auto blocks =
            blocks_by_user(browse, InteractionKind::browse, config.block_sizes.browse, config.trim_before);
        const auto eligible = filter_eligible(blocks, config.min_blocks);
        DiversityGroups g;
        g.following = compute_user_diversity(intersect(cohorts.following, eligible), blocks, table,
                                             config.missing_items);
        g.ignoring = compute_user_diversity(intersect(cohorts.ignoring, eligible), blocks, table,
                                            config.missing_items);
        if (g.following.users.size() < 2 || g.ignoring.users.size() < 2) {
          throw ArgumentError("need at least 2 eligible users per cohort");
        }
        return run_diversity(g, config.plan, campaign_options);
      });
    } catch (const StageError& e) {
      report.diversity_error = e.what();
    }
  }
  write_report_files(report, config.output_dir);
  return report;
}

}  // namespace echoaudit
