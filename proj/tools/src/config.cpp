#include "perplab_cli/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace perplab::cli {

using nlohmann::json;

const char* to_string(Command c) noexcept {
  switch (c) {
    case Command::funding: return "funding";
    case Command::replicate: return "replicate";
    case Command::jump: return "jump";
    case Command::backtest: return "backtest";
  }
  return "?";
}

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string index_path(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "must be finite");
  return v;
}

std::uint64_t as_count(const json& j, const std::string& path, bool allow_zero) {
  if (j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    const auto v = j.get<std::uint64_t>();
    if (v == 0 && !allow_zero) throw ConfigError(path, "must be a positive integer, got 0");
    return v;
  }
  throw ConfigError(path, allow_zero ? "expected a non-negative integer" : "expected a positive integer");
}

std::vector<double> as_numbers(const json& j, const std::string& path) {
  if (j.is_number()) return {as_number(j, path)};
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a number or a non-empty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_number(j[i], index_path(path, i)));
  return out;
}

Eigen::MatrixXd as_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty()) {
    throw ConfigError(path, "expected a non-empty array of rows");
  }
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const std::string rp = index_path(path, r);
    if (!j[r].is_array() || j[r].size() != cols) {
      throw ConfigError(rp, "expected a row of " + std::to_string(cols) + " numbers");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = as_number(j[r][c], index_path(rp, c));
    }
  }
  return m;
}

// Object view that records which keys were read so leftovers can be
// reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  std::string field(const std::string& key) const { return join(path_, key); }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& require(const std::string& key) {
    const json* v = find(key);
    if (!v) throw ConfigError(field(key), "required field is missing");
    return *v;
  }

  double number(const std::string& key, double fallback) {
    const json* v = find(key);
    return v ? as_number(*v, field(key)) : fallback;
  }

  std::optional<double> optional_number(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    return as_number(*v, field(key));
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError(field(key), "expected a string");
    return v->get<std::string>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(field(key), "expected true or false");
    return v->get<bool>();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(field(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class Fn>
auto rethrow_as_config(const std::string& field, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(field, e.what());
  }
}

struct ParamSpec {
  const char* name;
  std::optional<double> fallback;
};

Payoff build_payoff(const std::string& name, const std::vector<std::pair<std::string, double>>& given,
                    const std::string& params_path, std::string* label) {
  static const std::vector<std::pair<std::string, std::vector<ParamSpec>>> table{
      {"linear", {{"a", 0.0}, {"b", 1.0}}},
      {"power", {{"p", std::nullopt}, {"scale", 1.0}}},
      {"log_vs", {{"s0", std::nullopt}}},
      {"letf", {{"l0", 1.0}, {"s0", std::nullopt}, {"gamma", std::nullopt}}},
      {"gmm_cfmm", {{"v0", 1.0}, {"s01", std::nullopt}, {"s02", std::nullopt}, {"p", std::nullopt}}},
  };
  const std::vector<ParamSpec>* specs = nullptr;
  std::string names;
  for (const auto& [n, s] : table) {
    if (n == name) specs = &s;
    names += (names.empty() ? "" : ", ") + n;
  }
  if (!specs) throw ConfigError("payoff.name", "unknown payoff '" + name + "' (expected one of " + names + ")");

  std::vector<double> values;
  for (const ParamSpec& ps : *specs) {
    std::optional<double> v = ps.fallback;
    for (const auto& [k, x] : given) {
      if (k == ps.name) v = x;
    }
    if (!v) throw ConfigError(join(params_path, ps.name), "required parameter of '" + name + "' is missing");
    values.push_back(*v);
  }
  for (const auto& [k, x] : given) {
    bool known = false;
    for (const ParamSpec& ps : *specs) known = known || k == ps.name;
    if (!known) throw ConfigError(join(params_path, k), "unknown parameter for payoff '" + name + "'");
  }
  if (label) {
    std::ostringstream os;
    os.precision(15);
    os << name << "(";
    for (std::size_t i = 0; i < specs->size(); ++i) os << (i ? ", " : "") << (*specs)[i].name << "=" << values[i];
    os << ")";
    *label = os.str();
  }
  return rethrow_as_config(params_path, [&] {
    if (name == "linear") return payoffs::linear(values[0], values[1]);
    if (name == "power") return payoffs::power(values[0], values[1]);
    if (name == "log_vs") return payoffs::log_vs(values[0]);
    if (name == "letf") return payoffs::letf(values[0], values[1], values[2]);
    return payoffs::gmm_cfmm(values[0], values[1], values[2], values[3]);
  });
}

Payoff parse_payoff(Section& root, std::string* label) {
  Section s(root.require("payoff"), "payoff");
  const json& name = s.require("name");
  if (!name.is_string()) throw ConfigError("payoff.name", "expected a string");
  std::vector<std::pair<std::string, double>> params;
  if (const json* p = s.find("params")) {
    Section ps(*p, "payoff.params");
    for (auto it = p->begin(); it != p->end(); ++it) {
      params.emplace_back(it.key(), as_number(it.value(), ps.field(it.key())));
    }
  }
  s.finish();
  return build_payoff(name.get<std::string>(), params, "payoff.params", label);
}

RateKind parse_kind(Section& s) {
  const std::string k = s.string("kind", "funding");
  if (k == "funding") return RateKind::funding;
  if (k == "discount") return RateKind::discount;
  throw ConfigError(s.field("kind"), "expected 'funding' or 'discount', got '" + k + "'");
}

RateMode parse_mode(Section& s) {
  const std::string m = s.string("mode", "model");
  if (m == "model") return RateMode::model;
  if (m == "modelfree") return RateMode::modelfree;
  throw ConfigError(s.field("mode"), "expected 'model' or 'modelfree', got '" + m + "'");
}

SquareRootFactor parse_factor(Section& f) {
  SquareRootFactor out;
  out.v0 = f.number("v0", out.v0);
  out.kappa = f.number("kappa", out.kappa);
  out.theta = f.number("theta", out.theta);
  out.xi = f.number("xi", out.xi);
  f.finish();
  return out;
}

VolatilitySpec parse_volatility(const json& j, const std::string& path, Eigen::Index assets) {
  if (j.is_number()) {
    const double sigma = as_number(j, path);
    return rethrow_as_config(path, [&] {
      return VolatilitySpec::constant(Eigen::MatrixXd::Identity(assets, assets) * sigma);
    });
  }
  if (j.is_array()) {
    const Eigen::MatrixXd m = as_matrix(j, path);
    return rethrow_as_config(path, [&] { return VolatilitySpec::constant(m); });
  }
  Section s(j, path);
  const std::string type = s.string("type", "");
  if (type != "square_root") throw ConfigError(s.field("type"), "expected 'square_root'");
  const Eigen::MatrixXd loadings = as_matrix(s.require("loadings"), s.field("loadings"));
  const json& fj = s.require("factors");
  if (!fj.is_array()) throw ConfigError(s.field("factors"), "expected an array of objects");
  std::vector<SquareRootFactor> factors;
  for (std::size_t i = 0; i < fj.size(); ++i) {
    Section f(fj[i], index_path(s.field("factors"), i));
    factors.push_back(parse_factor(f));
  }
  s.finish();
  return rethrow_as_config(path, [&] { return VolatilitySpec::square_root(loadings, factors); });
}

DiffusionSpec parse_diffusion(Section& root) {
  Section m(root.require("market"), "market");
  DiffusionSpec spec;
  const std::vector<double> s0 = as_numbers(m.require("initial_prices"), m.field("initial_prices"));
  spec.initial_prices = Eigen::Map<const Eigen::VectorXd>(s0.data(), static_cast<Eigen::Index>(s0.size()));
  const auto n = spec.initial_prices.size();
  if (const json* d = m.find("drift")) {
    const std::vector<double> mu = as_numbers(*d, m.field("drift"));
    if (mu.size() != s0.size()) {
      throw ConfigError(m.field("drift"), "expected " + std::to_string(s0.size()) + " entries");
    }
    spec.drift = Eigen::Map<const Eigen::VectorXd>(mu.data(), n);
  } else {
    spec.drift = Eigen::VectorXd::Zero(n);
  }
  spec.volatility = parse_volatility(m.require("volatility"), m.field("volatility"), n);
  const double r = m.number("rate", 0.0);
  spec.rate = rethrow_as_config(m.field("rate"), [&] { return RateSpec::constant(r); });
  spec.money_market_initial = m.number("money_market_initial", 1.0);
  m.finish();
  rethrow_as_config("market", [&] {
    spec.validate();
    return 0;
  });
  return spec;
}

JumpSpec parse_jump_market(Section& root) {
  Section m(root.require("market"), "market");
  JumpSpec spec;
  spec.initial_price = m.number("initial_price", 100.0);
  const json& vol = m.require("volatility");
  if (vol.is_number()) {
    const double sigma = as_number(vol, m.field("volatility"));
    spec.volatility = rethrow_as_config(m.field("volatility"), [&] { return VolatilitySpec::scalar(sigma); });
  } else {
    Section v(vol, m.field("volatility"));
    const std::string type = v.string("type", "");
    if (type != "square_root") throw ConfigError(v.field("type"), "expected 'square_root'");
    Section f(v.require("factor"), v.field("factor"));
    const SquareRootFactor factor = parse_factor(f);
    v.finish();
    spec.volatility = rethrow_as_config(m.field("volatility"), [&] {
      return VolatilitySpec::square_root(Eigen::MatrixXd::Ones(1, 1), {factor});
    });
  }
  if (const auto r = m.optional_number("rate"); r && *r != 0.0) {
    throw ConfigError(m.field("rate"), "jump models run at zero interest rate");
  }
  std::vector<JumpAtom> atoms;
  if (const json* jj = m.find("jumps")) {
    if (!jj->is_array()) throw ConfigError(m.field("jumps"), "expected an array of {z, lambda} objects");
    for (std::size_t i = 0; i < jj->size(); ++i) {
      Section a((*jj)[i], index_path(m.field("jumps"), i));
      JumpAtom atom;
      atom.z = as_number(a.require("z"), a.field("z"));
      atom.lambda = as_number(a.require("lambda"), a.field("lambda"));
      a.finish();
      atoms.push_back(atom);
    }
  }
  m.finish();
  spec.comb = rethrow_as_config(m.field("jumps"), [&] { return LevyComb(atoms); });
  rethrow_as_config("market", [&] {
    spec.validate();
    return 0;
  });
  return spec;
}

GridConfig parse_grid(Section& root) {
  GridConfig g;
  const json* j = root.find("grid");
  if (!j) return g;
  Section s(*j, "grid");
  g.horizon = s.number("horizon", g.horizon);
  if (!(g.horizon > 0.0)) throw ConfigError("grid.horizon", "must be positive");
  if (const json* n = s.find("steps")) g.steps = as_count(*n, "grid.steps", false);
  s.finish();
  return g;
}

ExperimentConfig parse_experiment(Section& root, Command command, const GridConfig& grid) {
  ExperimentConfig e;
  const json* j = root.find("experiment");
  if (!j) return e;
  Section s(*j, "experiment");
  if (const json* v = s.find("seed")) e.seed = as_count(*v, "experiment.seed", true);
  e.kind = parse_kind(s);
  if (command != Command::backtest) {
    if (const json* v = s.find("n_paths")) e.n_paths = as_count(*v, "experiment.n_paths", false);
  }
  if (command == Command::replicate) e.mode = parse_mode(s);
  if (command == Command::replicate) {
    if (const json* v = s.find("grid_sizes")) {
      if (!v->is_array() || v->empty()) throw ConfigError("experiment.grid_sizes", "expected a non-empty array");
      std::size_t largest = 0;
      for (std::size_t i = 0; i < v->size(); ++i) {
        e.grid_sizes.push_back(as_count((*v)[i], index_path("experiment.grid_sizes", i), false));
        largest = std::max(largest, e.grid_sizes.back());
      }
      for (std::size_t i = 0; i < e.grid_sizes.size(); ++i) {
        if (largest % e.grid_sizes[i] != 0) {
          throw ConfigError(index_path("experiment.grid_sizes", i),
                            "must divide the largest grid size " + std::to_string(largest));
        }
      }
    }
  }
  if (command == Command::jump) {
    if (const json* v = s.find("hedge_powers")) e.hedge_powers = as_numbers(*v, "experiment.hedge_powers");
    e.condition_threshold = s.number("condition_threshold", e.condition_threshold);
    if (!(e.condition_threshold > 1.0)) throw ConfigError("experiment.condition_threshold", "must exceed 1");
    e.maturity = s.optional_number("maturity");
    if (e.maturity && !(*e.maturity > 0.0)) throw ConfigError("experiment.maturity", "must be positive");
    e.roll_interval = s.optional_number("roll_interval");
    if (e.roll_interval && !(*e.roll_interval > 0.0)) {
      throw ConfigError("experiment.roll_interval", "must be positive");
    }
    if (!e.roll_interval && e.maturity && *e.maturity < grid.horizon) {
      throw ConfigError("experiment.maturity", "must cover grid.horizon unless roll_interval is set");
    }
    if (const json* v = s.find("inner_paths")) e.inner_paths = as_count(*v, "experiment.inner_paths", false);
  }
  s.finish();
  return e;
}

OutputConfig parse_output(Section& root) {
  OutputConfig o;
  const json* j = root.find("output");
  if (!j) return o;
  Section s(*j, "output");
  o.directory = s.string("directory", o.directory);
  if (o.directory.empty()) throw ConfigError("output.directory", "must not be empty");
  o.per_path = s.boolean("per_path", o.per_path);
  if (const json* f = s.find("formats")) {
    if (!f->is_array()) throw ConfigError("output.formats", "expected an array of 'csv', 'txt', 'json'");
    o.csv = o.txt = o.json = false;
    for (std::size_t i = 0; i < f->size(); ++i) {
      const std::string p = index_path("output.formats", i);
      if (!(*f)[i].is_string()) throw ConfigError(p, "expected a string");
      const std::string v = (*f)[i].get<std::string>();
      if (v == "csv") o.csv = true;
      else if (v == "txt") o.txt = true;
      else if (v == "json") o.json = true;
      else throw ConfigError(p, "unknown format '" + v + "' (expected csv, txt or json)");
    }
  }
  s.finish();
  return o;
}

DataConfig parse_data(Section& root) {
  Section s(root.require("data"), "data");
  DataConfig d;
  d.path = s.string("path", "");
  if (d.path.empty()) throw ConfigError("data.path", "required field is missing");
  if (const json* r = s.find("rate")) {
    if (r->is_string()) {
      if (r->get<std::string>() != "column") throw ConfigError("data.rate", "expected a number or 'column'");
      d.rate = RateSource::column();
    } else {
      const double v = as_number(*r, "data.rate");
      if (v < 0.0) throw ConfigError("data.rate", "must be >= 0");
      d.rate = RateSource::constant(v);
    }
  }
  d.schema.timestamp_column = s.string("timestamp_column", d.schema.timestamp_column);
  d.schema.price_prefix = s.string("price_prefix", d.schema.price_prefix);
  d.schema.rate_column = s.string("rate_column", d.schema.rate_column);
  d.discount.floor_relative = s.number("floor_relative", d.discount.floor_relative);
  s.finish();
  return d;
}

}  // namespace

Payoff make_payoff(const std::string& name, const std::vector<std::pair<std::string, double>>& params) {
  return build_payoff(name, params, "payoff.params", nullptr);
}

RunConfig parse_config(const std::string& json_text, Command command) {
  json root_json;
  try {
    root_json = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  Section root(root_json, "");
  RunConfig cfg;
  cfg.command = command;
  cfg.payoff = parse_payoff(root, &cfg.payoff_label);
  if (command == Command::backtest) {
    cfg.data = parse_data(root);
  } else {
    cfg.grid = parse_grid(root);
    if (command == Command::jump) {
      cfg.jump = parse_jump_market(root);
      if (cfg.payoff.arity() != 1) throw ConfigError("payoff.name", "jump models have a single asset");
    } else {
      cfg.diffusion = parse_diffusion(root);
      if (cfg.payoff.arity() != cfg.diffusion.assets()) {
        throw ConfigError("payoff.name", "payoff takes " + std::to_string(cfg.payoff.arity()) +
                                             " prices but market has " +
                                             std::to_string(cfg.diffusion.assets()) + " assets");
      }
    }
  }
  cfg.experiment = parse_experiment(root, command, cfg.grid);
  cfg.output = parse_output(root);
  root.finish();
  return cfg;
}

RunConfig load_config(const std::string& path, Command command) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  RunConfig cfg = parse_config(buf.str(), command);
  if (command == Command::backtest) {
    const std::filesystem::path data(cfg.data.path);
    if (data.is_relative()) {
      cfg.data.path = (std::filesystem::path(path).parent_path() / data).lexically_normal().string();
    }
  }
  return cfg;
}

}  // namespace perplab::cli
