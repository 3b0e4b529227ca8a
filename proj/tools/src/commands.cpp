#include "perplab_cli/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "perplab/errors.hpp"
#include "perplab/parallel.hpp"
#include "perplab/replication.hpp"
#include "perplab/stats.hpp"

namespace perplab::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fixed4(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

// Ordered key/value summary. Values are stored once and rendered both as
// text and JSON so the two never disagree.
class Summary {
 public:
  using Value = std::variant<double, std::int64_t, std::string>;

  void headline(std::string line) { headlines_.push_back(std::move(line)); }
  void add(std::string key, Value v) { entries_.emplace_back(std::move(key), std::move(v)); }

  std::string text() const {
    std::ostringstream os;
    for (const auto& h : headlines_) os << h << '\n';
    if (!headlines_.empty()) os << '\n';
    for (const auto& [k, v] : entries_) {
      os << k << ": ";
      std::visit([&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, double>) os << num(x);
        else os << x;
      }, v);
      os << '\n';
    }
    return os.str();
  }

  std::string json_text() const {
    nlohmann::ordered_json j;
    for (const auto& [k, v] : entries_) std::visit([&](const auto& x) { j[k] = x; }, v);
    return j.dump(2) + "\n";
  }

 private:
  std::vector<std::string> headlines_;
  std::vector<std::pair<std::string, Value>> entries_;
};

class Output {
 public:
  Output(const RunConfig& cfg) : cfg_(cfg), dir_(cfg.output.directory) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + dir_.string() + "': " + ec.message());
  }

  std::string header() const {
    return std::string("perplab ") + to_string(cfg_.command) + " seed=" + std::to_string(cfg_.experiment.seed) +
           " payoff=" + cfg_.payoff_label;
  }

  void csv(const std::string& name, const std::function<void(std::ostream&)>& body) {
    if (cfg_.output.csv) write(name, body);
  }

  void finish(const Summary& s, bool quiet, std::ostream& out) {
    const std::string head = "# " + header() + "\n";
    if (cfg_.output.txt) write("summary.txt", [&](std::ostream& os) { os << head << s.text(); });
    if (cfg_.output.json) write("summary.json", [&](std::ostream& os) { os << s.json_text(); });
    if (!quiet) out << head << s.text();
  }

 private:
  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    const fs::path p = dir_ / name;
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
    body(os);
    os.flush();
    if (!os) throw std::runtime_error("error while writing '" + p.string() + "'");
  }

  const RunConfig& cfg_;
  fs::path dir_;
};

std::string per_path_name(const std::string& stem, std::size_t p) {
  return stem + "_path" + std::to_string(p) + ".csv";
}

bool keep_path_csv(const RunConfig& cfg, std::size_t p) { return p == 0 || cfg.output.per_path; }

void write_prices(std::ostream& os, const MarketPath& path, const std::string& comment) {
  os << "# " << comment << "\ntime";
  for (Eigen::Index i = 0; i < path.assets(); ++i) os << ",S_" << i + 1;
  os << ",money_market\n";
  for (std::size_t k = 0; k <= path.steps(); ++k) {
    os << num(path.grid.time(k));
    for (Eigen::Index i = 0; i < path.assets(); ++i) os << ',' << num(path.prices(static_cast<Eigen::Index>(k), i));
    os << ',' << num(path.money_market[k]) << '\n';
  }
}

const char* rate_word(RateKind k) { return k == RateKind::funding ? "funding" : "discount"; }

// ------------------------------------------------------------------ funding

void cmd_funding(const RunConfig& cfg, Output& out, Summary& s) {
  const TimeGrid grid = TimeGrid::uniform(cfg.grid.horizon, cfg.grid.steps);
  const std::size_t n = cfg.experiment.n_paths;
  const RateKind kind = cfg.experiment.kind;
  std::vector<double> model_int(n), free_int(n), model_pnl(n), free_pnl(n);
  std::vector<RateSeries> keep_model(n), keep_free(n);
  std::vector<MarketPath> keep_path(n);
  parallel_for(n, [&](std::size_t p) {
    const MarketPath path = simulate_diffusion(cfg.diffusion, grid, cfg.experiment.seed, p);
    RateSeries model = kind == RateKind::funding ? funding_rate_model(cfg.payoff, path)
                                                 : discount_rate(cfg.payoff, path, RateMode::model);
    RateSeries free = kind == RateKind::funding ? funding_rate_modelfree(cfg.payoff, path)
                                                : discount_rate(cfg.payoff, path, RateMode::modelfree);
    model_int[p] = model.integral.back();
    free_int[p] = free.integral.back();
    model_pnl[p] = long_side_pnl(cfg.payoff, path, model, path.steps());
    free_pnl[p] = long_side_pnl(cfg.payoff, path, free, path.steps());
    if (keep_path_csv(cfg, p)) {
      keep_model[p] = std::move(model);
      keep_free[p] = std::move(free);
      keep_path[p] = path;
    }
  });

  for (std::size_t p = 0; p < n; ++p) {
    if (!keep_path_csv(cfg, p)) continue;
    const std::string c = out.header() + " path=" + std::to_string(p);
    out.csv(per_path_name("rates_model", p), [&](std::ostream& os) { write_csv(os, keep_model[p], c); });
    out.csv(per_path_name("rates_modelfree", p), [&](std::ostream& os) { write_csv(os, keep_free[p], c); });
    out.csv(per_path_name("prices", p), [&](std::ostream& os) { write_prices(os, keep_path[p], c); });
  }

  const double T = cfg.grid.horizon;
  s.headline(std::string("mean ") + rate_word(kind) + " rate (model): " + fixed4(model_int[0] / T) + "/yr");
  s.headline(std::string("mean ") + rate_word(kind) + " rate (model-free): " + fixed4(free_int[0] / T) + "/yr");
  s.add("command", std::string("funding"));
  s.add("seed", static_cast<std::int64_t>(cfg.experiment.seed));
  s.add("payoff", cfg.payoff_label);
  s.add("kind", std::string(rate_word(kind)));
  s.add("steps", static_cast<std::int64_t>(cfg.grid.steps));
  s.add("horizon", T);
  s.add("n_paths", static_cast<std::int64_t>(n));
  s.add("integral_model", model_int[0]);
  s.add("integral_modelfree", free_int[0]);
  s.add("mean_rate_model", model_int[0] / T);
  s.add("mean_rate_modelfree", free_int[0] / T);
  if (kind == RateKind::discount) {
    s.add("discount_factor_model", keep_model[0].discount_factor.back());
    s.add("discount_factor_modelfree", keep_free[0].discount_factor.back());
  }
  s.add("long_side_pnl_model", model_pnl[0]);
  s.add("long_side_pnl_modelfree", free_pnl[0]);
  if (n > 1) {
    s.add("paths_mean_integral_model", stats::mean(model_int));
    s.add("paths_mean_integral_modelfree", stats::mean(free_int));
    s.add("paths_stderr_integral_model", stats::standard_error(model_int));
    s.add("paths_mean_long_side_pnl_model", stats::mean(model_pnl));
  }
}

// ------------------------------------------------------------------ replicate

void cmd_replicate(const RunConfig& cfg, Output& out, Summary& s) {
  const TimeGrid grid = TimeGrid::uniform(cfg.grid.horizon, cfg.grid.steps);
  const std::size_t n = cfg.experiment.n_paths;
  const auto& e = cfg.experiment;
  std::vector<double> terminal(n), relative(n), max_abs(n), rms(n);
  std::vector<std::optional<std::pair<MarketPath, ReplicationReport>>> keep(n);
  parallel_for(n, [&](std::size_t p) {
    MarketPath path = simulate_diffusion(cfg.diffusion, grid, e.seed, p);
    ReplicationReport r = replicate(cfg.payoff, path, e.kind, e.mode);
    terminal[p] = r.terminal_error;
    relative[p] = r.terminal_error / std::abs(r.target[0]);
    max_abs[p] = r.max_abs_error;
    rms[p] = r.rms_error;
    if (keep_path_csv(cfg, p)) keep[p].emplace(std::move(path), std::move(r));
  });

  for (std::size_t p = 0; p < n; ++p) {
    if (!keep[p]) continue;
    const std::string c = out.header() + " path=" + std::to_string(p);
    out.csv(per_path_name("replication", p),
            [&](std::ostream& os) { write_csv(os, keep[p]->second, keep[p]->first, c); });
  }
  out.csv("errors.csv", [&](std::ostream& os) {
    os << "# " << out.header() << "\npath,terminal_error,relative_terminal_error,max_abs_error,rms_error\n";
    for (std::size_t p = 0; p < n; ++p) {
      os << p << ',' << num(terminal[p]) << ',' << num(relative[p]) << ',' << num(max_abs[p]) << ','
         << num(rms[p]) << '\n';
    }
  });

  std::size_t within = 0;
  for (double r : relative) within += std::abs(r) < 0.01 ? 1 : 0;
  std::vector<double> abs_rel(n);
  for (std::size_t p = 0; p < n; ++p) abs_rel[p] = std::abs(relative[p]);

  s.headline("rms terminal error: " + num(stats::rms(terminal)) + " (" + fixed4(100.0 * stats::rms(relative)) +
             "% of the initial target)");
  s.add("command", std::string("replicate"));
  s.add("seed", static_cast<std::int64_t>(e.seed));
  s.add("payoff", cfg.payoff_label);
  s.add("kind", std::string(rate_word(e.kind)));
  s.add("mode", std::string(to_string(e.mode)));
  s.add("steps", static_cast<std::int64_t>(cfg.grid.steps));
  s.add("horizon", cfg.grid.horizon);
  s.add("n_paths", static_cast<std::int64_t>(n));
  s.add("terminal_error_path0", terminal[0]);
  s.add("rms_terminal_error", stats::rms(terminal));
  s.add("mean_terminal_error", stats::mean(terminal));
  s.add("rms_relative_terminal_error", stats::rms(relative));
  s.add("q95_abs_relative_terminal_error", stats::quantile(abs_rel, 0.95));
  s.add("share_relative_error_below_1pct", static_cast<double>(within) / static_cast<double>(n));
  s.add("max_abs_error", stats::max_abs(max_abs));

  if (!e.grid_sizes.empty()) {
    StudyOptions opts;
    opts.kind = e.kind;
    opts.mode = e.mode;
    opts.horizon = cfg.grid.horizon;
    const auto rows = convergence_study(cfg.payoff, cfg.diffusion, e.grid_sizes, n, e.seed, opts);
    out.csv("convergence.csv", [&](std::ostream& os) {
      os << "# " << out.header() << "\nsteps,rms_terminal_error,rms_relative_error,mean_terminal_error\n";
      for (const auto& r : rows) {
        os << r.steps << ',' << num(r.rms_terminal_error) << ',' << num(r.rms_relative_error) << ','
           << num(r.mean_terminal_error) << '\n';
      }
    });
    for (const auto& r : rows) {
      s.add("convergence_rms_terminal_error_N" + std::to_string(r.steps), r.rms_terminal_error);
    }
  }
}

// ------------------------------------------------------------------ jump

void cmd_jump(const RunConfig& cfg, Output& out, Summary& s) {
  const TimeGrid grid = TimeGrid::uniform(cfg.grid.horizon, cfg.grid.steps);
  const auto& e = cfg.experiment;
  const std::size_t n = e.n_paths;
  const LevyComb& comb = cfg.jump.comb;
  HedgeBasis basis = e.hedge_powers ? HedgeBasis{*e.hedge_powers, e.condition_threshold}
                                    : HedgeBasis::evenly_spaced(comb.size(), e.condition_threshold);
  if (basis.size() != comb.size()) {
    throw ConfigError("experiment.hedge_powers",
                      "need one power per jump atom (" + std::to_string(comb.size()) + ")");
  }
  const double maturity = e.maturity.value_or(cfg.grid.horizon);

  std::vector<double> terminal(n), relative(n), jump_err(n), moment_se(n), rate_int(n);
  std::vector<std::size_t> jumps(n);
  std::vector<std::vector<JumpEventRecord>> events(n);
  std::vector<std::optional<std::pair<JumpReplicationReport, RateSeries>>> keep(n);
  parallel_for(n, [&](std::size_t p) {
    const JumpMarketPath path = simulate_jump_diffusion(cfg.jump, grid, e.seed, p);
    RateSeries rates = e.kind == RateKind::funding ? funding_rate_jump(cfg.payoff, path, comb)
                                                   : discount_rate_jump(cfg.payoff, path, comb);
    JumpReplicationOptions opts;
    opts.roll_interval = e.roll_interval;
    opts.oracle.inner_paths = e.inner_paths;
    opts.oracle.seed = e.seed;
    opts.oracle.path = p;
    JumpReplicationReport r;
    try {
      r = replicate_jump(cfg.payoff, path, comb, basis, maturity, opts);
    } catch (const HedgeBasisSingular& err) {
      throw std::runtime_error("hedge basis singular on path " + std::to_string(p) + " at step " +
                               std::to_string(err.step()) + ": condition number " + num(err.condition_number()) +
                               " (threshold " + num(err.threshold()) + ")");
    }
    terminal[p] = r.base.terminal_error;
    relative[p] = r.base.terminal_error / std::abs(r.base.target[0]);
    jump_err[p] = r.max_relative_jump_error;
    moment_se[p] = r.max_moment_std_error;
    rate_int[p] = rates.integral.back();
    jumps[p] = r.jumps.size();
    events[p] = r.jumps;
    if (keep_path_csv(cfg, p)) keep[p].emplace(std::move(r), std::move(rates));
  });

  for (std::size_t p = 0; p < n; ++p) {
    if (!keep[p]) continue;
    const std::string c = out.header() + " path=" + std::to_string(p);
    out.csv(per_path_name("jump_replication", p), [&](std::ostream& os) { write_csv(os, keep[p]->first, c); });
    out.csv(per_path_name("jump_rates", p), [&](std::ostream& os) { write_csv(os, keep[p]->second, c); });
  }
  out.csv("jump_events.csv", [&](std::ostream& os) {
    os << "# " << out.header()
       << "\npath,step,time,atom,z,s_before,s_after,portfolio_change,payoff_change,error,condition_number\n";
    for (std::size_t p = 0; p < n; ++p) {
      for (const auto& ev : events[p]) {
        os << p << ',' << ev.step << ',' << num(grid.time(ev.step)) << ',' << ev.atom << ',' << num(ev.z) << ','
           << num(ev.s_before) << ',' << num(ev.s_after) << ',' << num(ev.portfolio_change) << ','
           << num(ev.payoff_change) << ',' << num(ev.error) << ',' << num(ev.condition_number) << '\n';
      }
    }
  });

  std::size_t total_jumps = 0;
  for (std::size_t j : jumps) total_jumps += j;
  const double worst_jump = stats::max_abs(jump_err);
  s.headline("jump steps: " + std::to_string(total_jumps) + ", max relative jump-step error " + num(worst_jump));
  s.headline(std::string("mean ") + rate_word(e.kind) + " rate (path 0): " +
             fixed4(rate_int[0] / cfg.grid.horizon) + "/yr");
  s.add("command", std::string("jump"));
  s.add("seed", static_cast<std::int64_t>(e.seed));
  s.add("payoff", cfg.payoff_label);
  s.add("kind", std::string(rate_word(e.kind)));
  s.add("steps", static_cast<std::int64_t>(cfg.grid.steps));
  s.add("horizon", cfg.grid.horizon);
  s.add("n_paths", static_cast<std::int64_t>(n));
  std::string powers;
  for (double p : basis.powers) powers += (powers.empty() ? "" : " ") + num(p);
  s.add("hedge_powers", powers);
  s.add("maturity", maturity);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    s.add("psi_p" + std::to_string(i + 1), comb.psi(basis.powers[i]));
  }
  s.add("rate_integral_path0", rate_int[0]);
  s.add("jump_count", static_cast<std::int64_t>(total_jumps));
  s.add("max_relative_jump_error", worst_jump);
  s.add("terminal_error_path0", terminal[0]);
  s.add("rms_terminal_error", stats::rms(terminal));
  s.add("rms_relative_terminal_error", stats::rms(relative));
  if (cfg.jump.volatility.stochastic()) s.add("max_moment_std_error", stats::max_abs(moment_se));
}

// ------------------------------------------------------------------ backtest

void cmd_backtest(const RunConfig& cfg, Output& out, Summary& s) {
  const PriceSeries series = load_csv(cfg.data.path, cfg.data.schema);
  const RateKind kind = cfg.experiment.kind;
  const BacktestResult r = backtest_funding(series, cfg.payoff, kind, cfg.data.rate, cfg.data.discount);
  const BacktestSummary& b = r.summary;

  out.csv("backtest_rates.csv", [&](std::ostream& os) { write_csv(os, r.rates, out.header()); });
  out.csv("backtest_pnl.csv", [&](std::ostream& os) {
    os << "# " << out.header() << "\ntimestamp,time,long_side_pnl\n";
    for (std::size_t k = 0; k < series.rows(); ++k) {
      os << num(series.timestamps[k]) << ',' << num(r.path.grid.time(k)) << ',' << num(b.long_side_pnl[k]) << '\n';
    }
  });

  for (const auto& notice : b.notices) s.headline(notice);
  s.headline(std::string("mean ") + rate_word(kind) + " rate: " + fixed4(b.mean_rate) + "/yr over " +
             num(b.horizon_years) + " years");
  s.add("command", std::string("backtest"));
  s.add("seed", static_cast<std::int64_t>(cfg.experiment.seed));
  s.add("payoff", cfg.payoff_label);
  s.add("kind", std::string(rate_word(kind)));
  s.add("data", cfg.data.path);
  s.add("assets", static_cast<std::int64_t>(series.assets()));
  s.add("intervals", static_cast<std::int64_t>(b.intervals));
  s.add("horizon_years", b.horizon_years);
  s.add("total_integral", b.total_integral);
  s.add("mean_rate", b.mean_rate);
  if (kind == RateKind::discount) s.add("discount_factor_horizon", b.discount_factor_horizon);
  s.add("final_long_side_pnl", b.long_side_pnl.back());
  for (std::size_t i = 0; i < b.notices.size(); ++i) s.add("notice_" + std::to_string(i + 1), b.notices[i]);
}

}  // namespace

int run_config(RunConfig cfg, bool quiet, std::ostream& out, std::ostream& err) {
  try {
    Output output(cfg);
    Summary summary;
    switch (cfg.command) {
      case Command::funding: cmd_funding(cfg, output, summary); break;
      case Command::replicate: cmd_replicate(cfg, output, summary); break;
      case Command::jump: cmd_jump(cfg, output, summary); break;
      case Command::backtest: cmd_backtest(cfg, output, summary); break;
    }
    output.finish(summary, quiet, out);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

int run_command(Command command, const CliOptions& options, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = load_config(options.config_path, command);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (options.seed) cfg.experiment.seed = *options.seed;
  if (options.out) cfg.output.directory = *options.out;
  return run_config(std::move(cfg), options.quiet, out, err);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Perpetual contract funding, replication and backtests"};
  app.name("perplab");
  app.require_subcommand(1);
  CliOptions opts;
  std::uint64_t seed = 0;
  std::string out_dir;
  const std::vector<std::pair<Command, const char*>> commands{
      {Command::funding, "Simulate paths and compute funding or discount rates"},
      {Command::replicate, "Replicate a perp with a self-financing delta hedge"},
      {Command::jump, "Jump-diffusion funding and replication with power contracts"},
      {Command::backtest, "Model-free rates on historical price data"},
  };
  std::vector<std::pair<Command, CLI::App*>> subs;
  for (const auto& [cmd, desc] : commands) {
    CLI::App* sub = app.add_subcommand(to_string(cmd), desc);
    sub->add_option("--config", opts.config_path, "JSON run configuration")->required();
    sub->add_option("--seed", seed, "Override experiment.seed");
    sub->add_option("--out", out_dir, "Override output.directory");
    sub->add_flag("--quiet", opts.quiet, "Do not print the summary");
    subs.emplace_back(cmd, sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  for (const auto& [cmd, sub] : subs) {
    if (!sub->parsed()) continue;
    if (sub->count("--seed")) opts.seed = seed;
    if (sub->count("--out")) opts.out = out_dir;
    return run_command(cmd, opts, out, err);
  }
  return kExitConfig;
}

}  // namespace perplab::cli
