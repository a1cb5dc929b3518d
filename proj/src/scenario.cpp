#include "wsn/scenario.hpp"

#include "wsn/errors.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace wsn {

using nlohmann::json;

namespace {

// Reads known keys out of one JSON object and rejects everything else.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where(""), "expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where(key), std::string("wrong type (") + e.what() + ")");
    }
  }

  std::optional<Section> child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return std::nullopt;
    return Section(*it, where(key));
  }

  const json* raw(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError(where(k), "unknown key");
  }

  std::string where(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_network(Section s, NetworkConfig& n) {
  s.get("area_side", n.area_side);
  s.get("node_count", n.node_count);
  s.get("packet_size_bits", n.packet_size_bits);
  s.get("comm_range_fraction", n.comm_range_fraction);
  s.get("initial_energy", n.initial_energy);
  s.get("rng_seed", n.rng_seed);
  s.get("round_count", n.round_count);
  s.get("stage_count", n.stage_count);
  s.finish();
}

void read_energy(Section s, EnergyModel& e) {
  s.get("e_elec", e.e_elec);
  s.get("e_amp", e.e_amp);
  s.get("e_idle", e.e_idle);
  s.get("e_agg", e.e_agg);
  s.finish();
}

void read_learning(Section s, LearningParams& l) {
  s.get("alpha0", l.alpha0);
  s.get("gamma", l.gamma);
  s.get("epsilon0", l.epsilon0);
  s.get("lambda", l.lambda);
  s.get("adaptive_alpha", l.adaptive_alpha);
  s.get("replay_capacity", l.replay_capacity);
  s.get("replay_batch", l.replay_batch);
  s.get("prune_min_visits", l.prune_min_visits);
  s.get("prune_window_rounds", l.prune_window_rounds);
  s.get("neighbor_cap", l.neighbor_cap);
  s.get("shared_table", l.shared_table);
  s.finish();
}

void read_weights(Section s, UtilityWeights& w) {
  s.get("alpha", w.alpha);
  s.get("beta", w.beta);
  s.get("gamma", w.gamma);
  s.finish();
}

void read_game(Section s, GameParams& g) {
  s.get("max_iters", g.max_iters);
  s.get("load_cap", g.load_cap);
  s.finish();
}

void read_clustering(Section s, ClusteringParams& c) {
  s.get("stage_target_sizes", c.stage_target_sizes);
  s.finish();
}

void read_routing(Section s, RoutingParams& r) {
  if (const json* sink = s.raw("sink"); sink && !sink->is_null()) {
    if (!sink->is_array() || sink->size() != 2 || !(*sink)[0].is_number() || !(*sink)[1].is_number())
      throw ConfigError(s.where("sink"), "expected [x, y]");
    r.sink = Point2((*sink)[0].get<double>(), (*sink)[1].get<double>());
  }
  s.get("processing_per_hop", r.processing_per_hop);
  s.finish();
}

void read_run(Section& s, ScenarioSpec& spec) {
  if (const json* names = s.raw("strategies")) {
    if (!names->is_array()) throw ConfigError(s.where("strategies"), "expected a list of names");
    spec.strategies.clear();
    for (const auto& n : *names) {
      const auto kind = n.is_string() ? parse_strategy(n.get<std::string>()) : std::nullopt;
      if (!kind) throw ConfigError(s.where("strategies"), "unknown strategy " + n.dump());
      spec.strategies.push_back(*kind);
    }
  }
  s.get("seeds", spec.seeds);
  std::string out = spec.output_dir.string();
  s.get("output_dir", out);
  spec.output_dir = out;
  s.get("success_window", spec.success_window);
  s.get("convergence_tolerance", spec.summary.convergence_tolerance);
  s.get("convergence_window", spec.summary.convergence_window);
}

std::string run_stem(StrategyKind kind, std::uint64_t seed) {
  return std::string(to_string(kind)) + "_" + std::to_string(seed);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw IoError("failed writing " + path.string());
}

std::string csv_number(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

void ScenarioSpec::validate() const {
  sim.validate();
  if (strategies.empty()) throw ConfigError("strategies", "must not be empty");
  if (seeds.empty()) throw ConfigError("seeds", "must not be empty");
  if (output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
  if (success_window < 1) throw ConfigError("success_window", "must be >= 1");
  if (!(summary.convergence_tolerance > 0.0)) throw ConfigError("convergence_tolerance", "must be > 0");
  if (summary.convergence_window < 1) throw ConfigError("convergence_window", "must be >= 1");
}

ScenarioSpec parse_scenario(const json& doc) {
  ScenarioSpec spec;
  Section root(doc, "");
  if (auto s = root.child("network")) read_network(*s, spec.sim.network);
  if (auto s = root.child("energy")) read_energy(*s, spec.sim.energy);
  if (auto s = root.child("learning")) read_learning(*s, spec.sim.learning);
  if (auto s = root.child("weights")) read_weights(*s, spec.sim.weights);
  if (auto s = root.child("game")) read_game(*s, spec.sim.game);
  if (auto s = root.child("clustering")) read_clustering(*s, spec.sim.clustering);
  if (auto s = root.child("routing")) read_routing(*s, spec.sim.routing);
  if (auto s = root.child("run")) {
    read_run(*s, spec);
    s->finish();
  }
  // The run keys are also accepted at top level.
  read_run(root, spec);
  root.finish();
  spec.validate();
  return spec;
}

ScenarioSpec load_scenario(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read " + path.string());
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  return parse_scenario(doc);
}

RunResult run_single(const ScenarioSpec& spec, StrategyKind kind, std::uint64_t seed) {
  RunResult r;
  r.strategy = kind;
  r.seed = seed;
  try {
    SimulationParams params = spec.sim;
    params.network.rng_seed = seed;
    Simulation sim(params, kind);
    r.series.reserve(static_cast<std::size_t>(params.network.round_count) + 1);
    r.series.push_back(initial_metrics(sim.world()));
    while (!sim.finished()) {
      const RoundOutcome out = sim.step();
      r.series.push_back(record_round(sim.world(), out, kind, r.series.back()));
      r.max_table_entries = std::max(r.max_table_entries, out.learning.max_table_entries);
    }
    r.summary = summarize(r.series, kind, seed, params.network.round_count, spec.summary);
    r.trailing_success = trailing_success_rate(r.series, spec.success_window);
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

bool ScenarioReport::all_ok() const {
  return std::all_of(runs.begin(), runs.end(), [](const RunResult& r) { return r.ok(); });
}

ScenarioReport run_scenario(const ScenarioSpec& spec, int jobs) {
  spec.validate();
  std::vector<std::pair<StrategyKind, std::uint64_t>> tasks;
  for (auto kind : spec.strategies)
    for (auto seed : spec.seeds) tasks.emplace_back(kind, seed);

  ScenarioReport report;
  report.runs.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const auto [kind, seed] = tasks[i];
      report.runs[i] = run_single(spec, kind, seed);
      const auto& r = report.runs[i];
      if (r.ok())
        spdlog::info("{} seed {}: {} rounds, {} alive", to_string(kind), seed, r.series.back().round,
                     r.series.back().alive_count);
      else
        spdlog::error("{} seed {} failed: {}", to_string(kind), seed, r.error);
    }
  };
  const int threads = std::clamp(jobs, 1, static_cast<int>(tasks.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  write_outputs(spec, report);
  return report;
}

ComparisonTable compare_table(std::span<const RunSummary> summaries) {
  ComparisonTable t;
  std::map<StrategyKind, std::vector<const RunSummary*>> by_kind;
  for (const auto& s : summaries) by_kind[s.strategy].push_back(&s);
  for (const auto& [kind, list] : by_kind) t.strategies.push_back(kind);

  std::size_t rows = 0;
  for (const auto& s : summaries) rows = std::max(rows, s.samples.size());
  for (std::size_t r = 0; r < rows; ++r) {
    int pct = 0;
    for (const auto& s : summaries)
      if (r < s.samples.size()) pct = s.samples[r].time_pct;
    t.time_pct.push_back(pct);
    std::vector<double> row;
    for (const auto& [kind, list] : by_kind) {
      double alive = 0.0, var = 0.0, reward = 0.0;
      for (const RunSummary* s : list) {
        const auto& sample = s->samples[std::min(r, s->samples.size() - 1)];
        alive += sample.alive;
        var += sample.variance;
        reward += sample.cumulative_reward;
      }
      const double n = static_cast<double>(list.size());
      row.insert(row.end(), {alive / n, var / n, reward / n});
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_comparison_csv(std::ostream& os, const ComparisonTable& table) {
  std::string text = "time_pct";
  for (auto kind : table.strategies) {
    const std::string name(to_string(kind));
    text += "," + name + "_active," + name + "_variance," + name + "_reward";
  }
  text += '\n';
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    text += std::to_string(table.time_pct[r]);
    for (double v : table.rows[r]) text += "," + csv_number(v);
    text += '\n';
  }
  os << text;
}

json summary_to_json(const RunSummary& s) {
  json samples = json::array();
  for (const auto& x : s.samples) {
    samples.push_back({{"time_pct", x.time_pct},
                       {"round", x.round},
                       {"alive", x.alive},
                       {"variance", x.variance},
                       {"cumulative_reward", x.cumulative_reward},
                       {"mean_soc_pct", x.mean_soc_pct}});
  }
  return {{"strategy", std::string(to_string(s.strategy))},
          {"seed", s.seed},
          {"rounds_run", s.rounds_run},
          {"soc_at_fractions", s.soc_at_fractions},
          {"eliminated_nodes", s.eliminated_nodes},
          {"longevity_pct", s.longevity_pct},
          {"convergence_round", s.convergence_round ? json(*s.convergence_round) : json(nullptr)},
          {"success_rate", s.success_rate},
          {"mean_delay", s.mean_delay},
          {"cumulative_reward", s.cumulative_reward},
          {"samples", samples}};
}

RunSummary summary_from_json(const json& j) {
  try {
    RunSummary s;
    const auto kind = parse_strategy(j.at("strategy").get<std::string>());
    if (!kind) throw IoError("unknown strategy in summary: " + j.at("strategy").dump());
    s.strategy = *kind;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.rounds_run = j.at("rounds_run").get<int>();
    s.soc_at_fractions = j.at("soc_at_fractions").get<std::array<double, 5>>();
    s.eliminated_nodes = j.at("eliminated_nodes").get<int>();
    s.longevity_pct = j.at("longevity_pct").get<double>();
    if (!j.at("convergence_round").is_null()) s.convergence_round = j.at("convergence_round").get<int>();
    s.success_rate = j.at("success_rate").get<double>();
    s.mean_delay = j.at("mean_delay").get<double>();
    s.cumulative_reward = j.at("cumulative_reward").get<double>();
    for (const auto& x : j.at("samples")) {
      s.samples.push_back({x.at("time_pct").get<int>(), x.at("round").get<int>(), x.at("alive").get<double>(),
                           x.at("variance").get<double>(), x.at("cumulative_reward").get<double>(),
                           x.at("mean_soc_pct").get<double>()});
    }
    return s;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed summary: ") + e.what());
  }
}

std::vector<RunSummary> load_summaries(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.ends_with("_summary.json")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<RunSummary> out;
  for (const auto& f : files) {
    std::ifstream is(f);
    try {
      out.push_back(summary_from_json(json::parse(is)));
    } catch (const json::parse_error& e) {
      throw IoError(f.string() + ": " + e.what());
    }
  }
  return out;
}

namespace {

// Per-round mean over seeds of one column, one column per strategy. Runs that
// ended early hold their last row.
std::string figure_csv(const ScenarioReport& report, const std::vector<StrategyKind>& kinds,
                       const std::function<double(const RunResult&, std::size_t)>& value) {
  std::map<StrategyKind, std::vector<const RunResult*>> by_kind;
  std::size_t length = 0;
  for (const auto& r : report.runs) {
    if (!r.ok()) continue;
    by_kind[r.strategy].push_back(&r);
    length = std::max(length, r.series.size());
  }
  std::string text = "round";
  for (auto k : kinds)
    if (by_kind.count(k)) text += "," + std::string(to_string(k));
  text += '\n';
  for (std::size_t i = 0; i < length; ++i) {
    text += std::to_string(i);
    for (auto k : kinds) {
      auto it = by_kind.find(k);
      if (it == by_kind.end()) continue;
      double sum = 0.0;
      for (const RunResult* r : it->second) sum += value(*r, std::min(i, r->series.size() - 1));
      text += "," + csv_number(sum / static_cast<double>(it->second.size()));
    }
    text += '\n';
  }
  return text;
}

}  // namespace

void write_outputs(const ScenarioSpec& spec, const ScenarioReport& report) {
  const auto& dir = spec.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  std::vector<RunSummary> summaries;
  json failures = json::array();
  for (const auto& r : report.runs) {
    if (!r.ok()) {
      failures.push_back({{"strategy", std::string(to_string(r.strategy))}, {"seed", r.seed}, {"error", r.error}});
      continue;
    }
    std::ostringstream csv;
    write_rounds_csv(csv, r.series);
    write_file(dir / (run_stem(r.strategy, r.seed) + "_rounds.csv"), csv.str());
    json j = summary_to_json(*r.summary);
    j["success_rate_trailing"] = r.trailing_success;
    j["max_table_entries"] = r.max_table_entries;
    write_file(dir / (run_stem(r.strategy, r.seed) + "_summary.json"), j.dump(2) + "\n");
    summaries.push_back(*r.summary);
  }

  if (!summaries.empty()) {
    std::ostringstream table;
    write_comparison_csv(table, compare_table(summaries));
    write_file(dir / "comparison.csv", table.str());
  }

  std::vector<StrategyKind> learning, clustered;
  for (auto k : spec.strategies) {
    if (uses_learning(k)) learning.push_back(k);
    if (is_clustered(k)) clustered.push_back(k);
  }
  const int window = spec.success_window;
  write_file(dir / "figdata_avg_energy.csv",
             figure_csv(report, spec.strategies, [](const RunResult& r, std::size_t i) { return r.series[i].mean_soc_pct; }));
  write_file(dir / "figdata_energy_variance.csv",
             figure_csv(report, spec.strategies, [](const RunResult& r, std::size_t i) { return r.series[i].soc_variance; }));
  write_file(dir / "figdata_active_sensors.csv",
             figure_csv(report, spec.strategies,
                        [](const RunResult& r, std::size_t i) { return static_cast<double>(r.series[i].alive_count); }));
  write_file(dir / "figdata_delay.csv",
             figure_csv(report, spec.strategies, [](const RunResult& r, std::size_t i) { return r.series[i].mean_delay; }));
  if (!learning.empty())
    write_file(dir / "figdata_convergence.csv",
               figure_csv(report, learning, [](const RunResult& r, std::size_t i) { return r.series[i].max_q_delta; }));
  if (!clustered.empty()) {
    write_file(dir / "figdata_cumulative_reward.csv",
               figure_csv(report, clustered,
                          [](const RunResult& r, std::size_t i) { return r.series[i].cumulative_reward; }));
  }
  write_file(dir / "figdata_success_rate.csv",
             figure_csv(report, spec.strategies, [window](const RunResult& r, std::size_t i) {
               return trailing_success_rate(std::span(r.series).first(i + 1), window);
             }));

  const auto manifest = dir / "errors.json";
  if (failures.empty()) {
    std::filesystem::remove(manifest, ec);
  } else {
    write_file(manifest, failures.dump(2) + "\n");
  }
}

}  // namespace wsn
