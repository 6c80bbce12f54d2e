// echo-audit: command-line front end for the echo chamber audit pipeline.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "echoaudit/cohort.hpp"
#include "echoaudit/error.hpp"
#include "echoaudit/logmodel.hpp"
#include "echoaudit/pipeline.hpp"
#include "echoaudit/report.hpp"
#include "echoaudit/synth.hpp"

namespace fs = std::filesystem;
using namespace echoaudit;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
  }
  fs::rename(tmp, path);
}

LogFormat guess_format(const std::string& flag, const fs::path& path) {
  if (!flag.empty()) return parse_format(flag);
  const auto ext = path.extension().string();
  return ext == ".jsonl" || ext == ".json" ? LogFormat::jsonl : LogFormat::csv;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audit interaction logs for echo chamber effects"};
  app.require_subcommand(1);

  // ingest-check
  auto* ingest = app.add_subcommand("ingest-check", "Parse a log and report record counts");
  std::string ingest_kind;
  std::string ingest_file;
  std::string ingest_format;
  bool ingest_lenient = false;
  ingest->add_option("--kind", ingest_kind, "browse, click or purchase")->required();
  ingest->add_option("file", ingest_file, "Log file")->required()->check(CLI::ExistingFile);
  ingest->add_option("--format", ingest_format, "csv or jsonl (default: from extension)");
  ingest->add_flag("--lenient", ingest_lenient, "Skip malformed rows instead of failing");

  // cohort
  auto* cohort = app.add_subcommand("cohort", "Split users into Following / Ignoring by page-view ratio");
  std::string cohort_browse;
  std::string cohort_format;
  std::string cohort_out = "cohorts.csv";
  CohortThresholds thresholds;
  cohort->add_option("--browse", cohort_browse, "Browse log")->required()->check(CLI::ExistingFile);
  cohort->add_option("--format", cohort_format, "csv or jsonl (default: from extension)");
  cohort->add_option("--lo", thresholds.lo, "Ignoring threshold")->capture_default_str();
  cohort->add_option("--hi", thresholds.hi, "Following threshold")->capture_default_str();
  cohort->add_flag("--percentile", thresholds.percentile, "Treat thresholds as PVR quantiles");
  cohort->add_option("--out", cohort_out, "Output CSV")->capture_default_str();

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic population with known dynamics");
  std::string synth_config;
  std::string synth_out;
  std::optional<std::uint64_t> synth_seed;
  synth->add_option("--config", synth_config, "Generator config (JSON)")->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", synth_seed, "Override master_seed");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Run the full measurement pipeline");
  std::string run_config;
  std::optional<std::uint64_t> run_seed;
  std::string run_out;
  std::optional<unsigned> run_threads;
  std::optional<std::size_t> run_reps;
  analyze->add_option("--config", run_config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  analyze->add_option("--seed", run_seed, "Master seed");
  analyze->add_option("--out", run_out, "Output directory");
  analyze->add_option("--threads", run_threads, "Worker threads (0: all cores)");
  analyze->add_option("--repetitions", run_reps, "Sampling repetitions");

  // report
  auto* report = app.add_subcommand("report", "Re-render markdown and CSV tables from report.json");
  std::string report_in;
  std::string report_out;
  report->add_option("--in", report_in, "report.json")->required()->check(CLI::ExistingFile);
  report->add_option("--out", report_out, "Output directory (default: next to report.json)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      const fs::path path(ingest_file);
      const auto res = parse_log_file(parse_kind(ingest_kind), path.string(), guess_format(ingest_format, path),
                                      ParseOptions{ingest_lenient});
      std::cout << "records: " << res.records.size() << "\nskipped: " << res.skipped << "\n";
      if (parse_kind(ingest_kind) == InteractionKind::browse) {
        const auto pvs = group_page_views(res.records);
        std::size_t n = 0;
        for (const auto& [user, views] : pvs) n += views.size();
        std::cout << "users: " << pvs.size() << "\npage views: " << n << "\n";
      }
    } else if (*cohort) {
      const fs::path path(cohort_browse);
      const auto res = parse_log_file(InteractionKind::browse, path.string(), guess_format(cohort_format, path));
      const auto table = compute_pvr(group_page_views(res.records));
      const auto split = split_cohorts(table, thresholds);
      std::ostringstream ss;
      write_cohorts_csv(table, split, ss);
      write_text(cohort_out, ss.str());
      std::cout << "following: " << split.following.size() << "\nignoring: " << split.ignoring.size()
                << "\nunassigned: " << split.unassigned.size() << "\n";
    } else if (*synth) {
      SynthConfig config;
      if (!synth_config.empty()) config = synth_config_from_json(slurp(synth_config));
      if (synth_seed) config.master_seed = *synth_seed;
      const auto out = generate(config);
      write_synth_output(out, synth_out);
      std::cout << "browse: " << out.browse.size() << "\nclick: " << out.click.size()
                << "\npurchase: " << out.purchase.size() << "\n";
    } else if (*analyze) {
      const fs::path cfg_path(run_config);
      auto config = run_config_from_json(slurp(cfg_path), cfg_path.parent_path());
      if (run_seed) config.plan.master_seed = *run_seed;
      if (!run_out.empty()) config.output_dir = run_out;
      if (run_threads) config.threads = *run_threads;
      if (run_reps) config.plan.repetitions = *run_reps;
      const auto result = run_pipeline(config, [](std::string_view s) { std::cerr << "[stage] " << s << "\n"; });
      for (const auto& c : result.campaigns) {
        if (c.error) std::cerr << "error: " << *c.error << "\n";
        else if (c.reinforcement) std::cout << decision_line(c) << "\n";
      }
      if (result.diversity_error) std::cerr << "error: " << *result.diversity_error << "\n";
      return result.complete() ? 0 : 1;
    } else if (*report) {
      const fs::path in(report_in);
      const auto r = report_from_json(slurp(in));
      write_report_files(r, report_out.empty() ? in.parent_path() : fs::path(report_out));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
