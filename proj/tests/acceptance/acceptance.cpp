// Acceptance runner. `acceptance --criterion N` runs one criterion; with no
// argument all nine run in order. Each prints a single PASS/FAIL line plus
// indented detail lines, and the exit code is nonzero if any failed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "echoaudit/blocks.hpp"
#include "echoaudit/cluster.hpp"
#include "echoaudit/cohort.hpp"
#include "echoaudit/experiment.hpp"
#include "echoaudit/logmodel.hpp"
#include "echoaudit/pipeline.hpp"
#include "echoaudit/sampling.hpp"
#include "echoaudit/synth.hpp"
#include "fixtures.hpp"

using namespace echoaudit;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string summary;
  std::vector<std::string> details;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ------------------------------------------------------------------ oracles

double choose2(double n) { return n * (n - 1) / 2; }

// ARI from agreeing-pair counts over all C(N,2) pairs.
double ari_by_pairs(const std::vector<Label>& p, const std::vector<Label>& q) {
  double both = 0, in_p = 0, in_q = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      const bool sp = p[i] == p[j];
      const bool sq = q[i] == q[j];
      both += sp && sq;
      in_p += sp;
      in_q += sq;
    }
  }
  const double expected = in_p * in_q / choose2(static_cast<double>(p.size()));
  return (both - expected) / ((in_p + in_q) / 2 - expected);
}

double pairwise_oracle(const std::vector<std::vector<double>>& v) {
  double s = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (i == j) continue;
      double d = 0;
      for (std::size_t k = 0; k < v[i].size(); ++k) d += (v[i][k] - v[j][k]) * (v[i][k] - v[j][k]);
      s += std::sqrt(d);
      ++n;
    }
  }
  return s / static_cast<double>(n);
}

// ------------------------------------------------------------------ criteria

Outcome formula_oracles() {
  const auto t0 = Clock::now();
  Outcome o;
  const auto four = PointSet::from_rows({{0, 0}, {0, 1}, {10, 0}, {10, 1}}, {"a", "b", "c", "d"});
  const Label four_labels[] = {0, 0, 1, 1};
  const double ch = calinski_harabasz(four, four_labels);
  const bool ch_ok = ch == 100.0;
  o.details.push_back(fmt("CH 4-point fixture = %.17g", ch));

  std::mt19937_64 rng(20190101);
  double ari_err = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto k1 = 2 + rng() % 5;
    const auto k2 = 2 + rng() % 5;
    const auto p = fixtures::random_labels(20, k1, rng);
    const auto q = fixtures::random_labels(20, k2, rng);
    ari_err = std::max(ari_err, std::abs(adjusted_rand_index(p, q) - ari_by_pairs(p, q)));
  }
  const bool ari_ok = ari_err <= 1e-12;
  o.details.push_back(fmt("ARI N=20 vs pair counting, 1000 pairs: max |err| = %.3g", ari_err));

  std::size_t table_mismatch = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 10 + rng() % 200;
    const auto p = fixtures::random_labels(n, 1 + rng() % 6, rng);
    const auto q = fixtures::random_labels(n, 1 + rng() % 6, rng);
    const auto t = contingency_table(p, q);
    std::set<Label> ps(p.begin(), p.end()), qs(q.begin(), q.end());
    if (t.rows != ps.size() || t.cols != qs.size() || t.total != n) {
      ++table_mismatch;
      continue;
    }
    std::size_t i = 0;
    for (Label a : ps) {
      std::size_t j = 0;
      for (Label b : qs) {
        std::uint64_t c = 0;
        for (std::size_t x = 0; x < n; ++x) c += p[x] == a && q[x] == b;
        table_mismatch += t.at(i, j) != c;
        ++j;
      }
      ++i;
    }
  }
  const bool table_ok = table_mismatch == 0;
  o.details.push_back(fmt("contingency vs double loop, 100 instances: %zu mismatched cells", table_mismatch));

  double mpd_err = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng() % 60;
    const std::size_t d = 1 + rng() % 16;
    std::normal_distribution<double> normal(0, 3);
    std::vector<std::vector<double>> v(n, std::vector<double>(d));
    for (auto& row : v) {
      for (auto& x : row) x = normal(rng);
    }
    mpd_err = std::max(mpd_err, std::abs(mean_pairwise_distance(v) - pairwise_oracle(v)));
  }
  const bool mpd_ok = mpd_err <= 1e-9;
  o.details.push_back(fmt("mean pairwise distance vs O(N^2), 50 sets: max |err| = %.3g", mpd_err));

  const double secs = seconds_since(t0);
  o.pass = ch_ok && ari_ok && table_ok && mpd_ok && secs < 5;
  o.summary = fmt("formula oracles (CH=%s ARI=%s tables=%s diversity=%s) in %.2f s (limit 5 s)", ch_ok ? "ok" : "bad",
                  ari_ok ? "ok" : "bad", table_ok ? "ok" : "bad", mpd_ok ? "ok" : "bad", secs);
  return o;
}

Outcome hopkins_calibration() {
  const auto t0 = Clock::now();
  Outcome o;
  double uniform = 0, clustered = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    uniform += hopkins(fixtures::uniform_points(2000, 8, seed), 200, 7000 + seed);
    const auto blobs = fixtures::gaussian_blobs(10, 200, 8, 0.3, 10.0, 300 + seed);
    clustered += hopkins(blobs.points, 200, 8000 + seed);
  }
  uniform /= 50;
  clustered /= 50;
  const double secs = seconds_since(t0);
  o.pass = uniform >= 0.45 && uniform <= 0.55 && clustered > 0.85 && secs < 30;
  o.summary = fmt("Hopkins mean uniform %.4f (want [0.45, 0.55]), 10 blobs %.4f (want > 0.85), %.2f s (limit 30 s)",
                  uniform, clustered, secs);
  return o;
}

Outcome ari_baseline() {
  Outcome o;
  std::mt19937_64 rng(4242);
  double sum = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto p = fixtures::random_labels(100, 4, rng);
    const auto q = fixtures::random_labels(100, 4, rng);
    sum += adjusted_rand_index(p, q);
  }
  const double mean = sum / 10000;
  o.pass = mean >= -0.01 && mean <= 0.01;
  o.summary = fmt("mean ARI of 10000 independent random pairs (N=100, K=4) = %.5f (want [-0.01, 0.01])", mean);
  return o;
}

Outcome k_recovery() {
  const auto t0 = Clock::now();
  Outcome o;
  std::vector<std::size_t> ks;
  for (std::size_t k = 2; k <= 10; ++k) ks.push_back(k);
  SelectKOptions options;
  options.bic.variant = BicVariant::xmeans;
  int hits = 0;
  std::map<std::size_t, int> histogram;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    // Centres sit on distinct axes 10 apart from the origin: 14.1 apart pairwise.
    const auto blobs = fixtures::gaussian_blobs(5, 200, 8, 0.3, 10.0, 500 + seed);
    const auto r = select_k(blobs.points, ks, 50, seed, options);
    ++histogram[r.k_star];
    hits += r.k_star >= 4 && r.k_star <= 6;
  }
  const double secs = seconds_since(t0);
  std::string hist;
  for (const auto& [k, n] : histogram) hist += fmt(" k=%zu:%d", k, n);
  o.details.push_back("k_star histogram:" + hist);
  o.pass = hits >= 45 && secs < 120;
  o.summary = fmt("k_star in {4,5,6} for %d/50 seeds (want >= 45), %.1f s (limit 120 s)", hits, secs);
  return o;
}

ExperimentReport synth_and_analyze(double beta, double gamma, std::uint64_t seed, const fs::path& root) {
  SynthConfig sc;
  sc.n_users = 200;
  sc.n_days = 60;
  sc.reinforcement_rate = beta;
  sc.narrowing_rate = gamma;
  sc.effect_scope = EffectScope::followers;
  sc.master_seed = seed;
  const auto data = root / fmt("data_%llu", static_cast<unsigned long long>(seed));
  write_synth_output(generate(sc), data);
  RunConfig rc;
  rc.browse_log = data / "browse.csv";
  rc.click_log = data / "click.csv";
  rc.embeddings = data / "embeddings.tsv";
  rc.campaigns = {InteractionKind::click};
  rc.plan.master_seed = seed;
  rc.output_dir = root / fmt("results_%llu", static_cast<unsigned long long>(seed));
  return run_pipeline(rc);
}

Outcome positive_detection() {
  const auto t0 = Clock::now();
  Outcome o;
  fixtures::TempDir dir("acceptance_positive");
  int passed = 0, a_ok = 0, b_ok = 0, c_ok = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto r = synth_and_analyze(0.3, 0.5, seed, dir.path());
    if (!r.complete()) {
      o.details.push_back(fmt("seed %llu: incomplete report", static_cast<unsigned long long>(seed)));
      continue;
    }
    const auto& rein = *r.campaigns.front().reinforcement;
    const auto& ch = rein.ch_drop.average;
    const auto& ari = rein.ari.average;
    const auto& df = r.diversity->row("following");
    const auto& di = r.diversity->row("ignoring");
    const bool a = ch.following_mean < ch.ignoring_mean && ch.p_value < 0.05;
    const bool b = ari.following_mean > ari.ignoring_mean && ari.p_value < 0.05;
    const bool c = df.last_mean < df.first_mean && df.within_p < 0.05 && di.within_p > 0.05;
    a_ok += a;
    b_ok += b;
    c_ok += c;
    passed += a && b && c;
    o.details.push_back(fmt("seed %2llu: CH-drop F %.3f I %.3f p=%.2e [%s]  ARI F %.3f I %.3f p=%.2e [%s]  "
                            "diversity F %.4f->%.4f p=%.2e, I p=%.2e [%s]",
                            static_cast<unsigned long long>(seed), ch.following_mean, ch.ignoring_mean, ch.p_value,
                            a ? "a" : "-", ari.following_mean, ari.ignoring_mean, ari.p_value, b ? "b" : "-",
                            df.first_mean, df.last_mean, df.within_p, di.within_p, c ? "c" : "-"));
  }
  const double secs = seconds_since(t0);
  o.pass = passed >= 8 && secs < 300;
  o.summary = fmt("positive detection in %d/10 seeds (want >= 8; a %d, b %d, c %d), %.1f s (limit 300 s)", passed,
                  a_ok, b_ok, c_ok, secs);
  return o;
}

Outcome null_scenario() {
  Outcome o;
  fixtures::TempDir dir("acceptance_null");
  int clean = 0, decisions = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto r = synth_and_analyze(0.0, 0.0, seed, dir.path());
    if (!r.complete()) {
      o.details.push_back(fmt("seed %llu: incomplete report", static_cast<unsigned long long>(seed)));
      continue;
    }
    const auto& campaign = r.campaigns.front();
    const auto& rein = *campaign.reinforcement;
    const double ch_p = rein.ch_drop.average.p_value;
    const double ari_p = rein.ari.average.p_value;
    const double div_first = r.diversity->between_first_p;
    const double div_last = r.diversity->between_last_p;
    const bool ok = ch_p > 0.05 && ari_p > 0.05 && div_first > 0.05 && div_last > 0.05;
    clean += ok;
    decisions += !reinforcement_detected(campaign);
    o.details.push_back(fmt("seed %2llu: CH-drop p=%.2e  ARI p=%.2e  diversity p first=%.2e last=%.2e  %s [%s]",
                            static_cast<unsigned long long>(seed), ch_p, ari_p, div_first, div_last,
                            decision_line(campaign).c_str(), ok ? "clean" : "-"));
  }
  o.details.push_back(fmt("decision rule reports 'not detected' in %d/10 seeds", decisions));
  o.pass = clean >= 8;
  o.summary = fmt("null scenario: all between-group p > 0.05 in %d/10 seeds (want >= 8)", clean);
  return o;
}

Outcome determinism() {
  Outcome o;
  fixtures::TempDir dir("acceptance_determinism");
  SynthConfig sc;
  sc.n_users = 120;
  sc.reinforcement_rate = 0.3;
  sc.narrowing_rate = 0.5;
  sc.master_seed = 77;
  write_synth_output(generate(sc), dir.path() / "data");
  {
    std::ofstream cfg(dir.path() / "run.json");
    cfg << R"({"browse_log":"data/browse.csv","click_log":"data/click.csv","purchase_log":"data/purchase.csv",)"
        << R"("embeddings":"data/embeddings.tsv","repetitions":20})";
  }
  const std::string cli = ECHO_AUDIT_CLI;
  const auto d = dir.path().string();
  auto run = [&](const std::string& env, const std::string& threads, const std::string& out) {
    const auto cmd = env + " " + cli + " analyze --config " + d + "/run.json --seed 11 --threads " + threads +
                     " --out " + d + "/" + out + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  const int rc_a = run("env -u ECHO_AUDIT_THREADS", "1", "a");
  const int rc_b = run("env -u ECHO_AUDIT_THREADS", "3", "b");
  const int rc_c = run("ECHO_AUDIT_THREADS=2", "8", "c");
  o.details.push_back(fmt("exit codes %d %d %d", rc_a, rc_b, rc_c));
  std::size_t files = 0, differing = 0;
  for (const auto& entry : fs::directory_iterator(dir.path() / "a")) {
    const auto name = entry.path().filename();
    const auto ref = slurp(entry.path());
    ++files;
    for (const char* other : {"b", "c"}) {
      const auto path = dir.path() / other / name;
      if (!fs::exists(path) || slurp(path) != ref) {
        ++differing;
        o.details.push_back(fmt("%s differs in run %s", name.string().c_str(), other));
      }
    }
  }
  const bool have_outputs = fs::exists(dir.path() / "a" / "report.json") && files >= 10;
  o.pass = rc_a == 0 && rc_b == 0 && rc_c == 0 && have_outputs && differing == 0;
  o.summary = fmt("%zu output files byte-identical across threads 1, 3 and a cap of 2: %s", files,
                  differing == 0 ? "yes" : "no");
  return o;
}

Outcome throughput() {
  Outcome o;
  fixtures::TempDir dir("acceptance_throughput");
  const std::size_t users = 10000, clicks_per_user = 100, pvs_per_user = 20, page = 5;
  {
    std::mt19937_64 rng(8);
    std::vector<InteractionRecord> click, browse;
    click.reserve(users * clicks_per_user);
    for (std::size_t t = 0; t < clicks_per_user; ++t) {
      for (std::size_t u = 0; u < users; ++u) {
        click.push_back(fixtures::action(InteractionKind::click, 1546300800 + static_cast<std::int64_t>(t * 60),
                                         "u" + std::to_string(u), "i" + std::to_string(rng() % 50000), 1.0,
                                         fmt("pv-%zu-%zu", u, t)));
      }
    }
    for (std::size_t v = 0; v < pvs_per_user; ++v) {
      for (std::size_t u = 0; u < users; ++u) {
        // Odd users click 18 of 20 page views, even users 2 of 20.
        const bool clicked = u % 2 ? v < 18 : v < 2;
        for (std::size_t p = 0; p < page; ++p) {
          browse.push_back(fixtures::browse(1546300800 + static_cast<std::int64_t>(v * 60), fmt("b-%zu-%zu", u, v),
                                            "u" + std::to_string(u), "i" + std::to_string(rng() % 50000),
                                            static_cast<std::uint32_t>(p), clicked && p == 0));
        }
      }
    }
    std::ofstream c(dir.path() / "click.csv");
    write_log(InteractionKind::click, click, c, LogFormat::csv);
    std::ofstream b(dir.path() / "browse.csv");
    write_log(InteractionKind::browse, browse, b, LogFormat::csv);
  }
  const auto t0 = Clock::now();
  const auto clicks = parse_log_file(InteractionKind::click, (dir.path() / "click.csv").string(), LogFormat::csv);
  const auto browse = parse_log_file(InteractionKind::browse, (dir.path() / "browse.csv").string(), LogFormat::csv);
  const auto t_ingest = seconds_since(t0);
  const auto cohorts = split_cohorts(compute_pvr(group_page_views(browse.records)));
  const auto t_cohort = seconds_since(t0);
  const auto blocks = blocks_by_user(clicks.records, InteractionKind::click, 10);
  const auto eligible = filter_eligible(blocks, 3);
  const double secs = seconds_since(t0);
  o.details.push_back(fmt("%zu click rows, %zu browse rows; ingest %.2f s, cohort %.2f s, block %.2f s",
                          clicks.records.size(), browse.records.size(), t_ingest, t_cohort - t_ingest,
                          secs - t_cohort));
  o.details.push_back(fmt("cohorts %zu following / %zu ignoring; %zu users with >= 3 blocks",
                          cohorts.following.size(), cohorts.ignoring.size(), eligible.size()));
  const bool sane = clicks.records.size() == users * clicks_per_user && eligible.size() == users &&
                    cohorts.following.size() + cohorts.ignoring.size() == users;
  o.pass = sane && secs < 60;
  o.summary = fmt("ingest + cohort + block of %zu click rows in %.2f s (limit 60 s)", clicks.records.size(), secs);
  return o;
}

Outcome protocol_fidelity() {
  Outcome o;
  // 4904 users with ten single-item page views each; odd users click 9 of 10.
  std::vector<InteractionRecord> browse;
  const std::size_t n_users = 4904;
  for (std::size_t u = 0; u < n_users; ++u) {
    for (std::size_t v = 0; v < 10; ++v) {
      const bool clicked = u % 2 ? v < 9 : v < 1;
      browse.push_back(fixtures::browse(static_cast<std::int64_t>(v), fmt("pv-%zu-%zu", u, v), fmt("u%05zu", u), "x",
                                        0, clicked));
    }
  }
  const auto cohorts = split_cohorts(compute_pvr(group_page_views(browse)));
  const std::vector<std::string> following(cohorts.following.begin(), cohorts.following.end());
  const std::vector<std::string> ignoring(cohorts.ignoring.begin(), cohorts.ignoring.end());
  o.details.push_back(fmt("cohorts %zu following / %zu ignoring", following.size(), ignoring.size()));
  bool ok = following.size() == 2452 && ignoring.size() == 2452;

  auto subset = [](const std::vector<std::string>& inner, const std::vector<std::string>& outer) {
    std::set<std::string> o(outer.begin(), outer.end());
    return std::all_of(inner.begin(), inner.end(), [&](const std::string& s) { return o.count(s) > 0; }) &&
           std::set<std::string>(inner.begin(), inner.end()).size() == inner.size();
  };
  const std::size_t expected_sample = static_cast<std::size_t>(std::floor(0.8 * 2452));
  std::size_t bad_reps = 0;
  for (std::size_t rep = 0; rep < 50; ++rep) {
    const auto s = draw_repetition_sample(following, ignoring, 0.8, 2019, "acceptance", rep);
    const bool rep_ok = s.following_resized.size() == 2452 && s.ignoring_resized.size() == 2452 &&
                        subset(s.following_resized, following) && subset(s.following, s.following_resized) &&
                        subset(s.ignoring, s.ignoring_resized) && s.following.size() == expected_sample &&
                        s.ignoring.size() == expected_sample;
    bad_reps += !rep_ok;
  }
  o.details.push_back(fmt("50 repetitions: resize 2452 -> p-sample %zu per group, %zu bad", expected_sample,
                          bad_reps));
  ok = ok && bad_reps == 0;

  // Unequal cohorts: the larger one is resized down first.
  std::vector<std::string> big;
  for (std::size_t i = 0; i < 5025; ++i) big.push_back(fmt("f%05zu", i));
  const auto uneven = draw_repetition_sample(big, ignoring, 0.8, 2019, "acceptance", 0);
  const bool uneven_ok = uneven.following_resized.size() == 2452 && uneven.following.size() == expected_sample &&
                         uneven.ignoring.size() == expected_sample && subset(uneven.following_resized, big);
  o.details.push_back(fmt("5025 vs 2452: resized to %zu, sampled %zu / %zu", uneven.following_resized.size(),
                          uneven.following.size(), uneven.ignoring.size()));
  ok = ok && uneven_ok;

  // Hopkins sample is 10% of the resized group.
  auto embed = [](const std::vector<std::string>& users, std::uint64_t seed) {
    GroupEmbeddings g;
    g.users = users;
    const auto first = fixtures::uniform_points(users.size(), 4, seed);
    const auto last = fixtures::uniform_points(users.size(), 4, seed + 1);
    g.first = PointSet(4, {first.values().begin(), first.values().end()}, users);
    g.last = PointSet(4, {last.values().begin(), last.values().end()}, users);
    return g;
  };
  CampaignGroups groups{embed(following, 1), embed(ignoring, 3)};
  SamplingPlan plan;
  plan.repetitions = 5;
  plan.master_seed = 2019;
  const auto tendency = run_tendency(groups, plan);
  const auto& f = tendency.row("following");
  const auto& i = tendency.row("ignoring");
  o.details.push_back(fmt("Hopkins rows: following amount %zu sample %zu, ignoring amount %zu sample %zu", f.amount,
                          f.sample_size, i.amount, i.sample_size));
  ok = ok && f.amount == 2452 && i.amount == 2452 && f.sample_size == 245 && i.sample_size == 245;
  o.pass = ok;
  o.summary = fmt("2452/2452 split, resize then 80%% p-sample to %zu per group, Hopkins sample %zu (10%%)",
                  expected_sample, f.sample_size);
  return o;
}

const std::vector<std::pair<const char*, std::function<Outcome()>>>& criteria() {
  static const std::vector<std::pair<const char*, std::function<Outcome()>>> all{
      {"formula oracles", formula_oracles},       {"Hopkins calibration", hopkins_calibration},
      {"ARI constant baseline", ari_baseline},    {"K recovery", k_recovery},
      {"end-to-end positive", positive_detection}, {"end-to-end null", null_scenario},
      {"determinism", determinism},               {"throughput", throughput},
      {"protocol fidelity", protocol_fidelity},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"echo-audit acceptance suite"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-9)")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  int failures = 0;
  for (std::size_t i = 0; i < criteria().size(); ++i) {
    if (only != 0 && static_cast<int>(i) + 1 != only) continue;
    const auto& [name, run] = criteria()[i];
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.summary = std::string("threw: ") + e.what();
    }
    std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, name, o.summary.c_str());
    for (const auto& d : o.details) std::printf("    %s\n", d.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
