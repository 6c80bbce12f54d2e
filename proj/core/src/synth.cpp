#include "echoaudit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "echoaudit/error.hpp"
#include "echoaudit/seed.hpp"
#include "io_util.hpp"
#include "parallel.hpp"

namespace echoaudit {
namespace {

using Vec = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) s += a[d] * b[d];
  return s;
}

bool affected(EffectScope scope, bool follower) {
  switch (scope) {
    case EffectScope::followers: return follower;
    case EffectScope::ignorers: return !follower;
    case EffectScope::all: return true;
  }
  return false;
}

std::string_view scope_name(EffectScope s) {
  switch (s) {
    case EffectScope::followers: return "followers";
    case EffectScope::ignorers: return "ignorers";
    case EffectScope::all: return "all";
  }
  return "followers";
}

EffectScope parse_scope(std::string_view s) {
  if (s == "followers") return EffectScope::followers;
  if (s == "ignorers") return EffectScope::ignorers;
  if (s == "all") return EffectScope::all;
  throw ConfigError("effect_scope must be followers, ignorers or all");
}

struct Catalog {
  std::size_t dim = 0;
  std::vector<double> vectors;  // n_items * dim
  std::vector<double> prices;
  std::vector<Vec> centers;

  std::span<const double> item(std::size_t i) const { return {vectors.data() + i * dim, dim}; }
  std::size_t size() const { return prices.size(); }
};

Catalog make_catalog(const SynthConfig& cfg) {
  std::mt19937_64 rng(derive_seed(cfg.master_seed, "synth/items"));
  std::normal_distribution<double> normal(0.0, 1.0);
  Catalog cat;
  cat.dim = cfg.dim;
  for (std::size_t t = 0; t < cfg.n_topics; ++t) {
    Vec c(cfg.dim);
    double norm = 0.0;
    do {
      for (auto& v : c) v = normal(rng);
      norm = std::sqrt(dot(c, c));
    } while (norm < 1e-9);
    for (auto& v : c) v *= cfg.topic_radius / norm;
    cat.centers.push_back(std::move(c));
  }
  cat.vectors.reserve(cfg.n_items * cfg.dim);
  std::lognormal_distribution<double> price(3.0, 1.0);
  for (std::size_t i = 0; i < cfg.n_items; ++i) {
    const auto& c = cat.centers[i % cfg.n_topics];
    for (std::size_t d = 0; d < cfg.dim; ++d) cat.vectors.push_back(c[d] + cfg.topic_spread * normal(rng));
    cat.prices.push_back(std::round(price(rng) * 100.0) / 100.0);
  }
  return cat;
}

std::string item_id(std::size_t i) { return "i" + std::to_string(i); }
std::string user_id(std::size_t u) { return "u" + std::to_string(u); }

struct UserLogs {
  std::vector<InteractionRecord> browse;
  std::vector<InteractionRecord> click;
  std::vector<InteractionRecord> purchase;
  UserTruth truth;
};

class UserSimulator {
 public:
  UserSimulator(const SynthConfig& cfg, const Catalog& cat, std::size_t u, bool follower)
      : cfg_(cfg), cat_(cat), rng_(derive_seed(cfg.master_seed, "synth/user", {u})) {
    out_.truth.user_id = user_id(u);
    out_.truth.designed_follower = follower;
    std::uniform_int_distribution<std::size_t> topic(0, cfg.n_topics - 1);
    out_.truth.topic = topic(rng_);
    pref_ = cat.centers[out_.truth.topic];
    for (auto& v : pref_) v += cfg.user_spread * normal_(rng_);
    beta_ = affected(cfg.effect_scope, follower) ? cfg.reinforcement_rate : 0.0;
    gamma_ = affected(cfg.effect_scope, follower) ? cfg.narrowing_rate : 0.0;
    click_rate_ = follower ? cfg.follower_click_rate : cfg.ignorer_click_rate;
  }

  UserLogs run() {
    for (std::size_t day = 0; day < cfg_.n_days; ++day) simulate_day(day);
    return std::move(out_);
  }

 private:
  void simulate_day(std::size_t day) {
    for (auto& v : pref_) v += cfg_.drift * normal_(rng_);
    const std::int64_t day_start = cfg_.start_timestamp + static_cast<std::int64_t>(day) * 86400;
    const double share = cfg_.n_days > 1 ? gamma_ * static_cast<double>(day) / static_cast<double>(cfg_.n_days - 1)
                                         : gamma_;
    std::size_t clicks = 0;
    for (std::size_t pv = 0; pv < cfg_.pv_per_day; ++pv) {
      const std::int64_t t = day_start + 8 * 3600 + static_cast<std::int64_t>(pv) * 1800;
      const std::string pv_id = "pv-" + out_.truth.user_id + "-" + std::to_string(day) + "-" + std::to_string(pv);
      std::vector<char> personal;
      const auto items = exposure(share, personal);
      std::optional<std::size_t> clicked;
      if (std::bernoulli_distribution(click_rate_)(rng_)) clicked = choose(items);
      for (std::size_t pos = 0; pos < items.size(); ++pos) {
        InteractionRecord r;
        r.kind = InteractionKind::browse;
        r.timestamp = t;
        r.pv_id = pv_id;
        r.user_id = out_.truth.user_id;
        r.item_id = item_id(items[pos]);
        r.position = static_cast<std::uint32_t>(pos);
        r.clicked = clicked && *clicked == pos;
        out_.browse.push_back(std::move(r));
      }
      if (clicked) {
        record_click(items[*clicked], t + 30, pv_id, personal[*clicked] != 0);
        ++clicks;
      }
    }
    for (std::size_t j = 0; clicks + j < cfg_.clicks_per_day; ++j) {
      const std::int64_t t = day_start + 16 * 3600 + static_cast<std::int64_t>(j) * 600;
      const auto candidates = uniform_items(cfg_.pv_size, {});
      const std::string pv_id = "s-" + out_.truth.user_id + "-" + std::to_string(day) + "-" + std::to_string(j);
      record_click(candidates[choose(candidates)], t, pv_id, false);
    }
    out_.truth.trajectory.push_back(pref_);
  }

  // Only items served from the preference neighbourhood feed back into the
  // preference.
  void record_click(std::size_t item, std::int64_t t, const std::string& pv_id, bool from_pool) {
    InteractionRecord c;
    c.kind = InteractionKind::click;
    c.timestamp = t;
    c.pv_id = pv_id;
    c.user_id = out_.truth.user_id;
    c.item_id = item_id(item);
    c.price = cat_.prices[item];
    if (std::bernoulli_distribution(cfg_.purchase_probability)(rng_)) {
      InteractionRecord p = c;
      p.kind = InteractionKind::purchase;
      p.timestamp = t + 60;
      out_.purchase.push_back(std::move(p));
    }
    out_.click.push_back(std::move(c));
    if (beta_ > 0.0 && from_pool) {
      const auto v = cat_.item(item);
      for (std::size_t d = 0; d < pref_.size(); ++d) pref_[d] += beta_ * (v[d] - pref_[d]);
    }
  }

  // Page of pv_size distinct items: Binomial(pv_size, share) from the
  // preference neighbourhood, the rest uniform.
  std::vector<std::size_t> exposure(double share, std::vector<char>& from_pool) {
    std::size_t personal = 0;
    if (share > 0.0) personal = std::binomial_distribution<std::size_t>(cfg_.pv_size, share)(rng_);
    std::vector<std::size_t> items;
    items.reserve(cfg_.pv_size);
    if (personal > 0) {
      const auto pool = neighbourhood();
      std::vector<std::size_t> idx(pool.size());
      std::iota(idx.begin(), idx.end(), 0);
      for (std::size_t i = 0; i < personal; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng_)]);
        items.push_back(pool[idx[i]]);
      }
    }
    auto rest = uniform_items(cfg_.pv_size - personal, items);
    items.insert(items.end(), rest.begin(), rest.end());
    std::vector<std::size_t> order(items.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng_);
    std::vector<std::size_t> page(items.size());
    from_pool.assign(items.size(), 0);
    for (std::size_t i = 0; i < order.size(); ++i) {
      page[i] = items[order[i]];
      from_pool[i] = order[i] < personal ? 1 : 0;
    }
    return page;
  }

  std::vector<std::size_t> neighbourhood() {
    std::vector<std::pair<double, std::size_t>> d(cat_.size());
    for (std::size_t i = 0; i < cat_.size(); ++i) {
      const auto v = cat_.item(i);
      double s = 0.0;
      for (std::size_t k = 0; k < pref_.size(); ++k) s += (v[k] - pref_[k]) * (v[k] - pref_[k]);
      d[i] = {s, i};
    }
    const std::size_t m = std::min(cfg_.pool_size, d.size());
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(m), d.end());
    std::vector<std::size_t> out(m);
    for (std::size_t i = 0; i < m; ++i) out[i] = d[i].second;
    return out;
  }

  std::vector<std::size_t> uniform_items(std::size_t count, const std::vector<std::size_t>& exclude) {
    std::uniform_int_distribution<std::size_t> pick(0, cat_.size() - 1);
    std::vector<std::size_t> out;
    out.reserve(count);
    while (out.size() < count) {
      const std::size_t i = pick(rng_);
      if (std::find(exclude.begin(), exclude.end(), i) != exclude.end()) continue;
      if (std::find(out.begin(), out.end(), i) != out.end()) continue;
      out.push_back(i);
    }
    return out;
  }

  std::size_t choose(const std::vector<std::size_t>& items) {
    std::vector<double> w(items.size());
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < items.size(); ++i) {
      w[i] = dot(pref_, cat_.item(items[i])) / cfg_.temperature;
      best = std::max(best, w[i]);
    }
    for (auto& x : w) x = std::exp(x - best);
    return std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng_);
  }

  const SynthConfig& cfg_;
  const Catalog& cat_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  Vec pref_;
  double beta_ = 0.0;
  double gamma_ = 0.0;
  double click_rate_ = 0.0;
  UserLogs out_;
};

void canonical_order(std::vector<InteractionRecord>& records) {
  std::stable_sort(records.begin(), records.end(), [](const InteractionRecord& a, const InteractionRecord& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    if (a.user_id != b.user_id) return a.user_id < b.user_id;
    return a.pv_id < b.pv_id;
  });
}

}  // namespace

void SynthConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("synth config: " + what); };
  if (n_users < 2) fail("n_users must be >= 2");
  if (n_items < 2) fail("n_items must be >= 2");
  if (dim < 1) fail("dim must be >= 1");
  if (n_days < 1) fail("n_days must be >= 1");
  if (n_topics < 1 || n_topics > n_items) fail("n_topics must lie in [1, n_items]");
  if (!(reinforcement_rate >= 0.0 && reinforcement_rate <= 1.0)) fail("reinforcement_rate must lie in [0, 1]");
  if (!(narrowing_rate >= 0.0 && narrowing_rate <= 1.0)) fail("narrowing_rate must lie in [0, 1]");
  if (!(follower_fraction >= 0.0 && follower_fraction <= 1.0)) fail("follower_fraction must lie in [0, 1]");
  if (!(temperature > 0.0)) fail("temperature must be positive");
  if (!(purchase_probability >= 0.0 && purchase_probability <= 1.0)) fail("purchase_probability must lie in [0, 1]");
  if (!(follower_click_rate >= 0.0 && follower_click_rate <= 1.0)) fail("follower_click_rate must lie in [0, 1]");
  if (!(ignorer_click_rate >= 0.0 && ignorer_click_rate <= 1.0)) fail("ignorer_click_rate must lie in [0, 1]");
  if (pv_size < 1 || pv_size > n_items) fail("pv_size must lie in [1, n_items]");
  if (pool_size < pv_size || pool_size > n_items) fail("pool_size must lie in [pv_size, n_items]");
  if (!(drift >= 0.0) || !(topic_spread >= 0.0) || !(user_spread >= 0.0) || !(topic_radius > 0.0)) {
    fail("drift, spreads and radius must be non-negative (radius positive)");
  }
  if (start_timestamp <= 0) fail("start_timestamp must be positive");
}

SynthConfig synth_config_from_json(std::string_view json_text) {
  const auto j = nlohmann::json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError("synth config is not a JSON object");
  SynthConfig c;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const auto& k = it.key();
      const auto& v = it.value();
      if (k == "n_users") c.n_users = v.get<std::size_t>();
      else if (k == "n_items") c.n_items = v.get<std::size_t>();
      else if (k == "dim") c.dim = v.get<std::size_t>();
      else if (k == "n_days") c.n_days = v.get<std::size_t>();
      else if (k == "n_topics") c.n_topics = v.get<std::size_t>();
      else if (k == "reinforcement_rate") c.reinforcement_rate = v.get<double>();
      else if (k == "narrowing_rate") c.narrowing_rate = v.get<double>();
      else if (k == "effect_scope") c.effect_scope = parse_scope(v.get<std::string>());
      else if (k == "follower_fraction") c.follower_fraction = v.get<double>();
      else if (k == "temperature") c.temperature = v.get<double>();
      else if (k == "purchase_probability") c.purchase_probability = v.get<double>();
      else if (k == "pv_per_day") c.pv_per_day = v.get<std::size_t>();
      else if (k == "pv_size") c.pv_size = v.get<std::size_t>();
      else if (k == "clicks_per_day") c.clicks_per_day = v.get<std::size_t>();
      else if (k == "follower_click_rate") c.follower_click_rate = v.get<double>();
      else if (k == "ignorer_click_rate") c.ignorer_click_rate = v.get<double>();
      else if (k == "drift") c.drift = v.get<double>();
      else if (k == "pool_size") c.pool_size = v.get<std::size_t>();
      else if (k == "topic_radius") c.topic_radius = v.get<double>();
      else if (k == "topic_spread") c.topic_spread = v.get<double>();
      else if (k == "user_spread") c.user_spread = v.get<double>();
      else if (k == "start_timestamp") c.start_timestamp = v.get<std::int64_t>();
      else if (k == "master_seed") c.master_seed = v.get<std::uint64_t>();
      else throw ConfigError("synth config: unknown key '" + k + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string synth_config_to_json(const SynthConfig& c) {
  nlohmann::ordered_json j;
  j["n_users"] = c.n_users;
  j["n_items"] = c.n_items;
  j["dim"] = c.dim;
  j["n_days"] = c.n_days;
  j["n_topics"] = c.n_topics;
  j["reinforcement_rate"] = c.reinforcement_rate;
  j["narrowing_rate"] = c.narrowing_rate;
  j["effect_scope"] = scope_name(c.effect_scope);
  j["follower_fraction"] = c.follower_fraction;
  j["temperature"] = c.temperature;
  j["purchase_probability"] = c.purchase_probability;
  j["pv_per_day"] = c.pv_per_day;
  j["pv_size"] = c.pv_size;
  j["clicks_per_day"] = c.clicks_per_day;
  j["follower_click_rate"] = c.follower_click_rate;
  j["ignorer_click_rate"] = c.ignorer_click_rate;
  j["drift"] = c.drift;
  j["pool_size"] = c.pool_size;
  j["topic_radius"] = c.topic_radius;
  j["topic_spread"] = c.topic_spread;
  j["user_spread"] = c.user_spread;
  j["start_timestamp"] = c.start_timestamp;
  j["master_seed"] = c.master_seed;
  return j.dump(2) + "\n";
}

SynthOutput generate(const SynthConfig& config) {
  config.validate();
  const Catalog cat = make_catalog(config);

  // Designed cohort: a fixed count, shuffled across user indices.
  const auto n_followers = static_cast<std::size_t>(
      std::llround(config.follower_fraction * static_cast<double>(config.n_users)));
  std::vector<char> follower(config.n_users, 0);
  std::fill(follower.begin(), follower.begin() + static_cast<std::ptrdiff_t>(n_followers), 1);
  std::mt19937_64 rng(derive_seed(config.master_seed, "synth/cohorts"));
  std::shuffle(follower.begin(), follower.end(), rng);

  std::vector<UserLogs> per_user(config.n_users);
  detail::parallel_for(config.n_users, 1, [&](std::size_t u) {
    per_user[u] = UserSimulator(config, cat, u, follower[u] != 0).run();
  });

  SynthOutput out;
  out.embeddings = EmbeddingTable(config.dim);
  for (std::size_t i = 0; i < cat.size(); ++i) out.embeddings.add(item_id(i), cat.item(i));
  for (auto& logs : per_user) {
    std::move(logs.browse.begin(), logs.browse.end(), std::back_inserter(out.browse));
    std::move(logs.click.begin(), logs.click.end(), std::back_inserter(out.click));
    std::move(logs.purchase.begin(), logs.purchase.end(), std::back_inserter(out.purchase));
    out.truth.users.push_back(std::move(logs.truth));
  }
  canonical_order(out.browse);
  canonical_order(out.click);
  canonical_order(out.purchase);
  return out;
}

void write_synth_output(const SynthOutput& output, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto dump = [&](const char* name, InteractionKind kind, const std::vector<InteractionRecord>& records) {
    std::ostringstream ss;
    write_log(kind, records, ss, LogFormat::csv);
    detail::write_file_atomic(dir / name, ss.str());
  };
  dump("browse.csv", InteractionKind::browse, output.browse);
  dump("click.csv", InteractionKind::click, output.click);
  dump("purchase.csv", InteractionKind::purchase, output.purchase);
  {
    std::ostringstream ss;
    write_embedding_table(output.embeddings, ss);
    detail::write_file_atomic(dir / "embeddings.tsv", ss.str());
  }
  nlohmann::ordered_json truth;
  truth["users"] = nlohmann::ordered_json::array();
  for (const auto& u : output.truth.users) {
    nlohmann::ordered_json ju;
    ju["user_id"] = u.user_id;
    ju["intent"] = u.designed_follower ? "follower" : "ignorer";
    ju["topic"] = u.topic;
    ju["trajectory"] = u.trajectory;
    truth["users"].push_back(std::move(ju));
  }
  detail::write_file_atomic(dir / "ground_truth.json", truth.dump() + "\n");
}

}  // namespace echoaudit
