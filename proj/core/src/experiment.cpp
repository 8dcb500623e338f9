#include "cabps/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>
#include <thread>

namespace cabps {

namespace {

const char* const kKinds[] = {"bps", "sl_pdmp", "ca_bps"};

double pick(const std::vector<double>& values, std::size_t i) {
  return values.size() == 1 ? values.front() : values.at(i);
}

Budget read_budget(const Config& cfg, const std::string& prefix,
                   const Budget& fallback) {
  Budget b;
  b.seconds = cfg.get_double(prefix + ".budget_seconds", fallback.seconds);
  b.windows = cfg.get_uint(prefix + ".budget_windows", fallback.windows);
  return b;
}

std::shared_ptr<const TargetModel> build_target(const TargetSpec& t, double gap) {
  return make_target(t.name, t.dim, t.a, t.b, gap);
}

}  // namespace

double SamplerSpec::window_for(std::size_t i) const { return pick(window_T, i); }
double SamplerSpec::step_for(std::size_t i) const { return pick(grid_step, i); }

void ExperimentConfig::validate() const {
  require(!samplers.empty(), "experiment: no samplers");
  require(replicates > 0, "experiment: replicates must be positive");
  require(!target.deltas.empty(), "experiment: empty delta grid");
  require(tune_outer > 0 && tune_inner > 0, "experiment: tuning iterations must be positive");
  require(tune_replicates > 0, "experiment: tuning replicates must be positive");
  require(!budget.empty(), "experiment: budget must be positive");
  for (const auto& s : samplers) {
    for (const auto* grid : {&s.window_T, &s.grid_step}) {
      require(grid->size() == 1 || grid->size() == target.deltas.size(),
              "experiment: per-sampler lists must match the delta grid");
      for (double v : *grid) require(v > 0.0, "experiment: window and grid step must be positive");
    }
    require(s.burn_in >= 0.0 && s.burn_in < 1.0, "experiment: burn_in must lie in [0, 1)");
  }
}

ExperimentConfig experiment_config_from(const Config& cfg) {
  ExperimentConfig e;
  e.target.name = cfg.get_string("target.name", e.target.name);
  e.target.dim = cfg.get_int("target.dim", e.target.dim);
  e.target.a = cfg.get_double("target.a", e.target.a);
  e.target.b = cfg.get_double("target.b", e.target.b);
  e.target.deltas = {cfg.get_double("target.delta", 1.0)};
  if (cfg.has("target.delta_grid"))
    e.target.deltas = cfg.get_doubles("target.delta_grid", {});
  if (e.target.deltas.empty())
    cfg.fail("target.delta_grid", "empty grid");
  if (e.target.name != "banana" && e.target.name != "gaussian" &&
      e.target.name != "mixture")
    cfg.fail("target.name", "unknown target '" + e.target.name + "'");

  const std::vector<double> window = cfg.get_doubles("sampler.window_T", {1.0});
  const std::vector<double> step = cfg.get_doubles("sampler.grid_step", {0.1});
  std::optional<double> refresh;
  if (cfg.has("sampler.refresh_rate")) refresh = cfg.get_double("sampler.refresh_rate", 0.0);
  const double burn = cfg.get_double("sampler.burn_in", 0.1);
  for (const auto& kind : cfg.get_strings("sampler.kind", {"bps", "ca_bps"})) {
    if (std::find(std::begin(kKinds), std::end(kKinds), kind) == std::end(kKinds))
      cfg.fail("sampler.kind", "unknown sampler '" + kind + "'");
    SamplerSpec s;
    s.kind = kind;
    const std::string p = "sampler." + kind + ".";
    s.window_T = cfg.get_doubles(p + "window_T", window);
    s.grid_step = cfg.get_doubles(p + "grid_step", step);
    s.refresh_rate = refresh;
    if (cfg.has(p + "refresh_rate")) s.refresh_rate = cfg.get_double(p + "refresh_rate", 0.0);
    s.burn_in = burn;
    e.samplers.push_back(std::move(s));
  }

  e.replicates = cfg.get_uint("experiment.replicates", e.replicates);
  e.budget = read_budget(cfg, "experiment", e.budget);
  e.tune = cfg.get_bool("experiment.tune", e.tune);
  e.seed = cfg.get_uint("experiment.seed", e.seed);

  e.tune_outer = static_cast<int>(cfg.get_int("tune.outer_iterations", e.tune_outer));
  e.tune_inner = static_cast<int>(cfg.get_int("tune.inner_iterations", e.tune_inner));
  e.tune_replicates = cfg.get_uint("tune.replicates", e.replicates);
  e.tune_budget = read_budget(cfg, "tune", e.budget);
  e.brackets.window_lo = cfg.get_double("tune.window_lo", e.brackets.window_lo);
  e.brackets.window_hi = cfg.get_double("tune.window_hi", e.brackets.window_hi);
  e.brackets.step_lo = cfg.get_double("tune.step_lo", e.brackets.step_lo);
  e.brackets.step_hi = cfg.get_double("tune.step_hi", e.brackets.step_hi);

  e.betas = cfg.get_doubles("ratio.beta", e.betas);
  e.epsilons = cfg.get_doubles("ratio.epsilon", e.epsilons);
  e.hardness = cfg.get_double("metric.hardness", e.hardness);
  e.ode.steps_per_unit_time = cfg.get_double("ode.steps_per_unit_time", e.ode.steps_per_unit_time);
  e.ode.t_max_velocity = cfg.get_double("ode.t_max_velocity", e.ode.t_max_velocity);
  e.record_wall_time = cfg.get_bool("bench.record_wall_time", e.record_wall_time);

  try {
    e.validate();
  } catch (const ContractViolation& err) {
    cfg.fail("", err.what());
  }
  return e;
}

std::string target_id(const TargetSpec& spec, double gap) {
  if (spec.name != "gaussian") return spec.name;
  return "gaussian:d=" + std::to_string(spec.dim) + ":delta=" + format_number(gap);
}

ResultRow run_replicate(const TargetModel& target, const std::string& target_name,
                        const SamplerSpec& spec, double window_T,
                        double grid_step, const ExperimentConfig& cfg,
                        const Budget& budget, std::size_t replicate,
                        std::uint64_t seed) {
  ResultRow row;
  row.target = target_name;
  row.sampler = spec.kind;
  row.replicate = replicate;
  row.seed = seed;
  row.window_T = window_T;
  row.grid_step = grid_step;
  try {
    Rng rng(seed);
    ChainOutput chain;
    if (spec.kind == "bps") {
      BpsParams p{window_T, grid_step, spec.refresh_rate};
      chain = run_bps(target, p, budget, rng);
    } else {
      MetroParams p;
      p.window_T = window_T;
      p.grid_step = grid_step;
      p.hardness = cfg.hardness;
      p.ode = cfg.ode;
      chain = spec.kind == "ca_bps" ? run_ca_bps(target, p, budget, rng)
                                    : run_sl_pdmp(target, p, budget, rng);
    }
    row.bounces = chain.bounces;
    row.flips = chain.flips;
    row.windows = chain.windows();
    row.accepts = chain.accepts;
    row.wall_s = cfg.record_wall_time ? chain.wall_seconds : 0.0;
    const auto kept = collect_samples(chain, spec.burn_in);
    if (kept.empty()) throw NumericalError("no samples within budget");
    std::vector<double> first(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) first[i] = kept[i][0];
    row.ks = ks_distance(first, [&target](double t) {
      return target.marginal_cdf_first_coord(t);
    });
  } catch (const std::exception& err) {
    row.failed = true;
    row.error = err.what();
    row.ks = std::nan("");
  }
  return row;
}

double tuning_objective(const TargetModel& target, const SamplerSpec& spec,
                        double window_T, double grid_step,
                        const ExperimentConfig& cfg, std::size_t gap_index,
                        unsigned jobs) {
  std::vector<double> ks(cfg.tune_replicates);
  parallel_for(ks.size(), jobs, [&](std::size_t r) {
    const auto seed = derive_seed(cfg.seed, 1000 + gap_index, r);
    const ResultRow row = run_replicate(target, "", spec, window_T, grid_step,
                                        cfg, cfg.tune_budget, r, seed);
    ks[r] = row.failed ? 1.0 : row.ks;
  });
  return median(ks);
}

double gap_from_target_id(const std::string& id) {
  const std::string tag = ":delta=";
  const auto pos = id.find(tag);
  if (pos == std::string::npos) return 0.0;
  return std::strtod(id.c_str() + pos + tag.size(), nullptr);
}

void summarise(const std::vector<double>& betas,
               const std::vector<double>& epsilons, ExperimentResult& result) {
  result.summaries.clear();
  result.ratios.clear();
  std::vector<std::string> targets, samplers;
  auto note = [](std::vector<std::string>& seen, const std::string& s) {
    if (std::find(seen.begin(), seen.end(), s) == seen.end()) seen.push_back(s);
  };
  for (const auto& row : result.rows) {
    note(targets, row.target);
    note(samplers, row.sampler);
  }
  const double nan = std::nan("");
  for (const auto& id : targets) {
    const double gap = gap_from_target_id(id);
    std::map<std::string, SamplerSummary> by_kind;
    for (const auto& kind : samplers) {
      SamplerSummary s;
      s.target = id;
      s.gap = gap;
      s.sampler = kind;
      std::vector<double> ks, events, wall, windows;
      bool present = false;
      for (const auto& row : result.rows) {
        if (row.target != id || row.sampler != kind) continue;
        present = true;
        s.window_T = row.window_T;
        s.grid_step = row.grid_step;
        if (row.failed) {
          ++s.failures;
          continue;
        }
        ks.push_back(row.ks);
        events.push_back(static_cast<double>(row.bounces + row.flips));
        wall.push_back(row.wall_s);
        windows.push_back(static_cast<double>(row.windows));
      }
      if (!present) continue;
      s.median_ks = ks.empty() ? nan : median(ks);
      s.median_events = events.empty() ? nan : median(events);
      s.median_wall_s = wall.empty() ? nan : median(wall);
      s.median_windows = windows.empty() ? nan : median(windows);
      by_kind[kind] = s;
      result.summaries.push_back(s);
    }
    if (!by_kind.count("bps") || !by_kind.count("ca_bps")) continue;
    const auto& bps = by_kind["bps"];
    const auto& ca = by_kind["ca_bps"];
    const double scale = std::pow(ca.median_ks / bps.median_ks, 2.0);
    for (const std::string pairing : {"matched", "raw"}) {
      const double k = pairing == "matched" ? scale : 1.0;
      for (double beta : betas) {
        for (double eps : epsilons) {
          RatioRow r;
          r.target = id;
          r.gap = gap;
          r.pairing = pairing;
          r.beta = beta;
          r.epsilon = eps;
          r.A = bps.median_wall_s;
          r.B = ca.median_wall_s * k;
          r.k_bps = bps.median_events;
          r.k_ca = ca.median_events * k;
          r.ks_bps = bps.median_ks;
          r.ks_ca = ca.median_ks;
          r.ratio = nan;
          if (std::isfinite(r.A) && r.A > 0.0 && std::isfinite(r.B) &&
              std::isfinite(r.k_bps) && std::isfinite(r.k_ca))
            r.ratio = efficiency_ratio(r.A, r.B, r.k_bps, r.k_ca, beta, eps);
          r.efficiency = 1.0 / r.ratio;
          result.ratios.push_back(r);
        }
      }
    }
  }
}

std::vector<ResultRow> read_results_csv(std::istream& in) {
  const std::string expected =
      "target,sampler,replicate,seed,ks,bounces,flips,windows,accepts,wall_s,T,delta";
  std::string line;
  if (!std::getline(in, line) || line != expected)
    throw ContractViolation("results.csv: missing or unexpected header (want '" +
                            expected + "')");
  std::vector<ResultRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    if (f.size() != 12)
      throw ContractViolation("results.csv:" + std::to_string(lineno) +
                              ": expected 12 columns, got " + std::to_string(f.size()));
    ResultRow r;
    r.target = f[0];
    r.sampler = f[1];
    r.replicate = std::stoull(f[2]);
    r.seed = std::stoull(f[3]);
    r.ks = std::strtod(f[4].c_str(), nullptr);
    r.bounces = std::stoull(f[5]);
    r.flips = std::stoull(f[6]);
    r.windows = std::stoull(f[7]);
    r.accepts = std::stoull(f[8]);
    r.wall_s = std::strtod(f[9].c_str(), nullptr);
    r.window_T = std::strtod(f[10].c_str(), nullptr);
    r.grid_step = std::strtod(f[11].c_str(), nullptr);
    r.failed = std::isnan(r.ks);
    rows.push_back(std::move(r));
  }
  return rows;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned jobs,
                                const ExperimentHooks& hooks, bool only_tune) {
  cfg.validate();
  auto log = [&hooks](const std::string& msg) {
    if (hooks.log) hooks.log(msg);
  };
  ExperimentResult result;
  for (std::size_t g = 0; g < cfg.target.deltas.size(); ++g) {
    const double gap = cfg.target.deltas[g];
    const auto target = build_target(cfg.target, gap);
    require(target->has_marginal_cdf(),
            "experiment: target '" + target->name() + "' has no reference marginal");
    const std::string id = target_id(cfg.target, gap);

    for (const auto& spec : cfg.samplers) {
      double T = spec.window_for(g);
      double step = spec.step_for(g);
      if (cfg.tune || only_tune) {
        TunedSetting setting{id, gap, spec.kind, {}};
        log("tuning " + spec.kind + " on " + id);
        setting.result = nested_tune(
            [&](double t, double s) {
              return tuning_objective(*target, spec, t, s, cfg, g, jobs);
            },
            cfg.brackets, cfg.tune_outer, cfg.tune_inner,
            [&](const TuneEvaluation& ev) {
              if (hooks.on_tune_evaluation) hooks.on_tune_evaluation(setting, ev);
            });
        T = setting.result.window_T;
        step = setting.result.grid_step;
        log("  tuned T = " + format_number(T) + ", grid_step = " + format_number(step) +
            ", median KS = " + format_number(setting.result.objective));
        result.tuned.push_back(std::move(setting));
      }
      if (only_tune) continue;

      log("running " + spec.kind + " on " + id);
      std::vector<ResultRow> rows(cfg.replicates);
      parallel_for(rows.size(), jobs, [&](std::size_t r) {
        rows[r] = run_replicate(*target, id, spec, T, step, cfg, cfg.budget, r,
                                derive_seed(cfg.seed, g, r));
      });
      for (auto& row : rows) {
        if (row.failed) log("  replicate " + std::to_string(row.replicate) + " failed: " + row.error);
        result.rows.push_back(std::move(row));
      }
    }
  }
  summarise(cfg.betas, cfg.epsilons, result);
  return result;
}

void parallel_for(std::size_t n, unsigned jobs,
                  const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, jobs), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  for (auto& t : pool) t.join();
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "target,sampler,replicate,seed,ks,bounces,flips,windows,accepts,wall_s,T,delta\n";
  for (const auto& r : rows)
    out << r.target << ',' << r.sampler << ',' << r.replicate << ',' << r.seed << ','
        << format_number(r.ks) << ',' << r.bounces << ',' << r.flips << ','
        << r.windows << ',' << r.accepts << ',' << format_number(r.wall_s) << ','
        << format_number(r.window_T) << ',' << format_number(r.grid_step) << '\n';
}

void write_summary_csv(std::ostream& out, const std::vector<RatioRow>& rows) {
  out << "target,gap,pairing,beta,epsilon,ratio,efficiency,A,B,k_bps,k_ca,ks_bps,ks_ca\n";
  for (const auto& r : rows)
    out << r.target << ',' << format_number(r.gap) << ',' << r.pairing << ','
        << format_number(r.beta) << ',' << format_number(r.epsilon) << ','
        << format_number(r.ratio) << ',' << format_number(r.efficiency) << ','
        << format_number(r.A) << ',' << format_number(r.B) << ','
        << format_number(r.k_bps) << ',' << format_number(r.k_ca) << ','
        << format_number(r.ks_bps) << ',' << format_number(r.ks_ca) << '\n';
}

void write_medians_csv(std::ostream& out, const std::vector<SamplerSummary>& rows) {
  out << "target,gap,sampler,T,delta,median_ks,median_events,median_wall_s,median_windows,failures\n";
  for (const auto& s : rows)
    out << s.target << ',' << format_number(s.gap) << ',' << s.sampler << ','
        << format_number(s.window_T) << ',' << format_number(s.grid_step) << ','
        << format_number(s.median_ks) << ',' << format_number(s.median_events) << ','
        << format_number(s.median_wall_s) << ',' << format_number(s.median_windows)
        << ',' << s.failures << '\n';
}

void write_tuning_csv(std::ostream& out, const std::vector<TunedSetting>& tuned) {
  out << "target,gap,sampler,T,delta,objective,best\n";
  for (const auto& t : tuned)
    for (const auto& ev : t.result.trace)
      out << t.target << ',' << format_number(t.gap) << ',' << t.sampler << ','
          << format_number(ev.window_T) << ',' << format_number(ev.grid_step) << ','
          << format_number(ev.objective) << ','
          << (ev.window_T == t.result.window_T && ev.grid_step == t.result.grid_step ? 1 : 0)
          << '\n';
}

}  // namespace cabps
