#include "cli.hpp"

#include "plots.hpp"

#include "cabps/config.hpp"
#include "cabps/dynamics.hpp"
#include "cabps/experiment.hpp"
#include "cabps/validation.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace cabps::cli {

namespace {

struct Options {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  bool quiet = false;
  std::string results;
  double effort = 1.0;
  bool mutate_divergence = false;
};

std::string keys_help() {
  std::ostringstream s;
  s << "Config keys (flat `key = value`, `#` comments):\n";
  for (const auto& k : config_keys())
    s << "  " << k.name << " [" << k.default_value << "]  " << k.description << '\n';
  return s.str();
}

Config load_config(const Options& o) {
  Config cfg;
  if (!o.config.empty()) cfg = Config::load(o.config);
  if (o.seed) cfg.set("experiment.seed", std::to_string(*o.seed));
  return cfg;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_number(v[i]);
  return s;
}

// Fully resolved configuration, so a run can be reproduced from its output.
std::string resolved(const ExperimentConfig& e) {
  std::ostringstream s;
  s << "target.name = " << e.target.name << '\n'
    << "target.a = " << format_number(e.target.a) << '\n'
    << "target.b = " << format_number(e.target.b) << '\n'
    << "target.dim = " << e.target.dim << '\n'
    << "target.delta_grid = " << join(e.target.deltas) << '\n'
    << "metric.hardness = " << format_number(e.hardness) << '\n'
    << "ode.steps_per_unit_time = " << format_number(e.ode.steps_per_unit_time) << '\n'
    << "ode.t_max_velocity = " << format_number(e.ode.t_max_velocity) << '\n';
  std::string kinds;
  for (const auto& sp : e.samplers) kinds += (kinds.empty() ? "" : ",") + sp.kind;
  s << "sampler.kind = " << kinds << '\n';
  if (!e.samplers.empty())
    s << "sampler.burn_in = " << format_number(e.samplers.front().burn_in) << '\n';
  for (const auto& sp : e.samplers) {
    s << "sampler." << sp.kind << ".window_T = " << join(sp.window_T) << '\n'
      << "sampler." << sp.kind << ".grid_step = " << join(sp.grid_step) << '\n';
    if (sp.refresh_rate)
      s << "sampler." << sp.kind << ".refresh_rate = " << format_number(*sp.refresh_rate) << '\n';
  }
  s << "experiment.replicates = " << e.replicates << '\n'
    << "experiment.budget_seconds = " << format_number(e.budget.seconds) << '\n'
    << "experiment.budget_windows = " << e.budget.windows << '\n'
    << "experiment.tune = " << (e.tune ? "true" : "false") << '\n'
    << "experiment.seed = " << e.seed << '\n'
    << "tune.outer_iterations = " << e.tune_outer << '\n'
    << "tune.inner_iterations = " << e.tune_inner << '\n'
    << "tune.replicates = " << e.tune_replicates << '\n'
    << "tune.budget_seconds = " << format_number(e.tune_budget.seconds) << '\n'
    << "tune.budget_windows = " << e.tune_budget.windows << '\n'
    << "tune.window_lo = " << format_number(e.brackets.window_lo) << '\n'
    << "tune.window_hi = " << format_number(e.brackets.window_hi) << '\n'
    << "tune.step_lo = " << format_number(e.brackets.step_lo) << '\n'
    << "tune.step_hi = " << format_number(e.brackets.step_hi) << '\n'
    << "ratio.beta = " << join(e.betas) << '\n'
    << "ratio.epsilon = " << join(e.epsilons) << '\n'
    << "bench.record_wall_time = " << (e.record_wall_time ? "true" : "false") << '\n';
  return s.str();
}

void write_file(const std::string& path, const std::function<void(std::ostream&)>& fn) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  fn(f);
}

std::string human_summary(const ExperimentResult& r) {
  std::ostringstream s;
  char buf[256];
  s << "Per-sampler medians\n";
  std::snprintf(buf, sizeof buf, "  %-28s %-8s %10s %10s %12s %10s %8s\n", "target", "sampler",
                "T", "delta", "median KS", "events", "failed");
  s << buf;
  for (const auto& m : r.summaries) {
    std::snprintf(buf, sizeof buf, "  %-28s %-8s %10.4g %10.4g %12.5g %10.4g %8zu\n",
                  m.target.c_str(), m.sampler.c_str(), m.window_T, m.grid_step, m.median_ks,
                  m.median_events, m.failures);
    s << buf;
  }
  s << "\nEfficiency at eps = 0 (1/r; above 1 favours CA-BPS). The matched pairing rescales\n"
       "CA-BPS time and events by (KS_ca / KS_bps)^2, a heuristic assuming error ~ time^-1/2.\n";
  for (const auto& x : r.ratios) {
    if (x.epsilon != 0.0) continue;
    std::snprintf(buf, sizeof buf, "  %-28s %-8s beta=%-6g r(0)=%-12.5g 1/r(0)=%.5g\n",
                  x.target.c_str(), x.pairing.c_str(), x.beta, x.ratio, x.efficiency);
    s << buf;
  }
  return s.str();
}

void write_experiment_outputs(const std::string& dir, const ExperimentResult& r) {
  write_file(dir + "/results.csv", [&](std::ostream& f) { write_results_csv(f, r.rows); });
  write_file(dir + "/summary.csv", [&](std::ostream& f) { write_summary_csv(f, r.ratios); });
  write_file(dir + "/medians.csv", [&](std::ostream& f) { write_medians_csv(f, r.summaries); });
  write_file(dir + "/summary.txt", [&](std::ostream& f) { f << human_summary(r); });
}

ExperimentResult load_results(const Options& o) {
  const std::string path = o.results.empty() ? o.out + "/results.csv" : o.results;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  ExperimentResult r;
  r.rows = read_results_csv(in);
  return r;
}

int cmd_validate(const Options& o, std::ostream& out) {
  ValidationOptions vo;
  if (o.seed) vo.seed = *o.seed;
  vo.effort = o.effort;
  testing::set_flip_divergence_sign(o.mutate_divergence);
  const auto results = run_validation(vo);
  testing::set_flip_divergence_sign(false);
  bool ok = true;
  char buf[512];
  std::snprintf(buf, sizeof buf, "%-20s %-6s %12s %12s %8s  %s\n", "suite", "result", "worst",
                "tolerance", "seconds", "invariant");
  out << buf;
  for (const auto& r : results) {
    ok = ok && r.passed;
    std::snprintf(buf, sizeof buf, "%-20s %-6s %12.3e %12.3e %8.2f  %s%s%s\n", r.name.c_str(),
                  r.passed ? "PASS" : "FAIL", r.worst, r.tolerance, r.seconds,
                  r.invariant.c_str(), r.detail.empty() ? "" : ": ", r.detail.c_str());
    out << buf;
  }
  out << (ok ? "all suites passed\n" : "validation FAILED\n");
  return ok ? kSuccess : kValidationFailure;
}

int cmd_run(const Options& o, bool only_tune, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = experiment_config_from(load_config(o));
  std::filesystem::create_directories(o.out);
  write_file(o.out + "/resolved.cfg", [&](std::ostream& f) { f << resolved(cfg); });
  if (!o.quiet) out << "# resolved configuration\n" << resolved(cfg) << '\n';

  ExperimentHooks hooks;
  if (!o.quiet) hooks.log = [&err](const std::string& m) { err << m << std::endl; };
  std::ofstream trace;
  if (cfg.tune || only_tune) {
    trace.open(o.out + "/tuning.csv");
    trace << "target,gap,sampler,T,delta,objective\n";
    hooks.on_tune_evaluation = [&trace](const TunedSetting& t, const TuneEvaluation& ev) {
      trace << t.target << ',' << format_number(t.gap) << ',' << t.sampler << ','
            << format_number(ev.window_T) << ',' << format_number(ev.grid_step) << ','
            << format_number(ev.objective) << std::endl;
    };
  }
  const ExperimentResult r = run_experiment(cfg, o.jobs, hooks, only_tune);
  if (!r.tuned.empty()) {
    write_file(o.out + "/tuned.cfg", [&](std::ostream& f) {
      f << "# tuned settings: paste into a config to reuse\n";
      for (const auto& sp : cfg.samplers) {
        std::vector<double> T, D;
        for (const auto& t : r.tuned)
          if (t.sampler == sp.kind) T.push_back(t.result.window_T), D.push_back(t.result.grid_step);
        f << "sampler." << sp.kind << ".window_T = " << join(T) << '\n'
          << "sampler." << sp.kind << ".grid_step = " << join(D) << '\n';
      }
    });
  }
  if (only_tune) {
    if (!o.quiet) out << "tuned settings written to " << o.out << "/tuned.cfg\n";
    return kSuccess;
  }
  write_experiment_outputs(o.out, r);
  if (!o.quiet) out << human_summary(r);
  return kSuccess;
}

int cmd_ratio(const Options& o, std::ostream& out) {
  const ExperimentConfig cfg = experiment_config_from(load_config(o));
  ExperimentResult r = load_results(o);
  summarise(cfg.betas, cfg.epsilons, r);
  std::filesystem::create_directories(o.out);
  write_file(o.out + "/summary.csv", [&](std::ostream& f) { write_summary_csv(f, r.ratios); });
  write_file(o.out + "/medians.csv", [&](std::ostream& f) { write_medians_csv(f, r.summaries); });
  if (!o.quiet) out << human_summary(r);
  return kSuccess;
}

int cmd_plot_metric(const Options& o, std::ostream& out) {
  const Config cfg = load_config(o);
  const ExperimentConfig e = experiment_config_from(cfg);
  const auto target = make_target(e.target.name, e.target.dim, e.target.a, e.target.b,
                                  e.target.deltas.front());
  if (target->dim() != 2) cfg.fail("target.dim", "plot-metric needs a 2-dimensional target");
  const auto r = cfg.get_doubles("plot.region", {-3, 4, -2, 10});
  if (r.size() != 4) cfg.fail("plot.region", "expected x_min,x_max,y_min,y_max");
  const auto grid = cfg.get_int("plot.grid", 9);
  if (grid < 1) cfg.fail("plot.grid", "must be positive");
  plot::plot_metric(*target, {r[0], r[1], r[2], r[3]}, static_cast<int>(grid), e.hardness, o.out);
  if (!o.quiet) out << "wrote " << o.out << "/metric.svg\n";
  return kSuccess;
}

int cmd_plot_results(const Options& o, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = experiment_config_from(load_config(o));
  ExperimentResult r = load_results(o);
  summarise(cfg.betas, cfg.epsilons, r);
  const auto files = plot::plot_results(r.ratios, o.out, err);
  if (!o.quiet)
    for (const auto& f : files) out << "wrote " << f << '\n';
  return kSuccess;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"cabps: bouncy-particle samplers with curvature-adaptive velocities"};
  app.require_subcommand(1);
  app.footer(keys_help());
  Options o;
  std::uint64_t seed = 0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "config file")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "seed override");
    sub->add_option("--jobs", o.jobs, "worker threads")->capture_default_str();
    sub->add_flag("--quiet", o.quiet, "suppress progress and summaries");
    sub->footer(keys_help());
  };
  auto* validate = app.add_subcommand("validate", "run the cross-module oracle suites");
  common(validate);
  validate->add_option("--effort", o.effort, "scale of the Monte Carlo smoke tests");
  validate->add_flag("--mutate-divergence", o.mutate_divergence,
                     "flip the divergence sign (the suites must then fail)")
      ->group("");
  auto* run_cmd = app.add_subcommand("run", "run an experiment and write CSVs");
  common(run_cmd);
  auto* tune = app.add_subcommand("tune", "tune (T, grid step) by nested Brent");
  common(tune);
  auto* ratio = app.add_subcommand("ratio", "recompute r(eps) tables from results.csv");
  common(ratio);
  ratio->add_option("--results", o.results, "results.csv (default OUT/results.csv)");
  auto* plot_metric = app.add_subcommand("plot-metric", "draw metric ellipses for a 2-d target");
  common(plot_metric);
  auto* plot_results = app.add_subcommand("plot-results", "draw efficiency curves");
  common(plot_results);
  plot_results->add_option("--results", o.results, "results.csv (default OUT/results.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kConfigError;
  }
  for (auto* sub : app.get_subcommands())
    if (sub->count("--seed")) o.seed = seed;

  try {
    if (validate->parsed()) return cmd_validate(o, out);
    if (run_cmd->parsed()) return cmd_run(o, false, out, err);
    if (tune->parsed()) return cmd_run(o, true, out, err);
    if (ratio->parsed()) return cmd_ratio(o, out);
    if (plot_metric->parsed()) return cmd_plot_metric(o, out);
    if (plot_results->parsed()) return cmd_plot_results(o, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kConfigError;
}

}  // namespace cabps::cli
