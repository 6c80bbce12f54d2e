#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "echoaudit/blocks.hpp"
#include "echoaudit/cluster.hpp"
#include "echoaudit/logmodel.hpp"

using namespace echoaudit;

namespace {

PointSet random_points(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0, 1);
  std::vector<double> v(n * dim);
  for (auto& x : v) x = normal(rng);
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = std::to_string(i);
  return PointSet(dim, std::move(v), std::move(ids));
}

std::string click_csv(std::size_t rows) {
  std::vector<InteractionRecord> records(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    auto& r = records[i];
    r.kind = InteractionKind::click;
    r.timestamp = 1546300800 + static_cast<std::int64_t>(i);
    r.user_id = "u" + std::to_string(i % 1000);
    r.item_id = "i" + std::to_string(i % 7919);
    r.pv_id = "pv" + std::to_string(i);
    r.price = 1.0;
  }
  std::ostringstream out;
  write_log(InteractionKind::click, records, out, LogFormat::csv);
  return out.str();
}

}  // namespace

static void BM_ParseClickCsv(benchmark::State& state) {
  const auto text = click_csv(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    std::istringstream in(text);
    benchmark::DoNotOptimize(parse_log(InteractionKind::click, in, LogFormat::csv));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ParseClickCsv)->Arg(10000)->Arg(100000);

static void BM_BlocksByUser(benchmark::State& state) {
  const auto text = click_csv(static_cast<std::size_t>(state.range(0)));
  std::istringstream in(text);
  const auto parsed = parse_log(InteractionKind::click, in, LogFormat::csv);
  for (auto _ : state) {
    benchmark::DoNotOptimize(blocks_by_user(parsed.records, InteractionKind::click, 10));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BlocksByUser)->Arg(100000);

static void BM_KMeans(benchmark::State& state) {
  const auto points = random_points(static_cast<std::size_t>(state.range(0)), 8, 1);
  const auto k = static_cast<std::size_t>(state.range(1));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(kmeans(points, k, ++seed));
}
BENCHMARK(BM_KMeans)->Args({1000, 5})->Args({2000, 15});

static void BM_Hopkins(benchmark::State& state) {
  const auto points = random_points(static_cast<std::size_t>(state.range(0)), 8, 2);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(hopkins(points, points.size() / 10, ++seed));
}
BENCHMARK(BM_Hopkins)->Arg(2000)->Arg(5000);

static void BM_MeanPairwiseDistance(benchmark::State& state) {
  const auto points = random_points(static_cast<std::size_t>(state.range(0)), 8, 3);
  for (auto _ : state) benchmark::DoNotOptimize(mean_pairwise_distance(points));
}
BENCHMARK(BM_MeanPairwiseDistance)->Arg(200)->Arg(2000);
BENCHMARK_MAIN();
