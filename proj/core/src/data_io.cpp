#include "perplab/data_io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "perplab/errors.hpp"

namespace perplab {

void PriceSeries::validate() const {
  const std::size_t n = timestamps.size();
  if (n == 0) throw DataError("price series is empty");
  if (static_cast<std::size_t>(prices.rows()) != n) {
    throw DataError("price series: price rows do not match timestamps");
  }
  if (static_cast<Eigen::Index>(asset_names.size()) != prices.cols() || prices.cols() == 0) {
    throw DataError("price series: asset names do not match price columns");
  }
  if (rates && rates->size() != n) throw DataError("price series: rate column length mismatch");
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0 && !(timestamps[k] > timestamps[k - 1])) {
      throw DataError("price series: timestamps not strictly increasing at row " +
                      std::to_string(k));
    }
    for (Eigen::Index i = 0; i < prices.cols(); ++i) {
      const double v = prices(static_cast<Eigen::Index>(k), i);
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw DataError("price series: non-positive price in row " + std::to_string(k));
      }
    }
  }
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = b + s.size();
  if (*b == '+') ++b;
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && ptr == e;
}

bool parse_int(const std::string& s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
  return ec == std::errc() && ptr == s.data() + pos + len;
}

std::string num(double x) {
  char buf[64];
  if (std::floor(x) == x && std::abs(x) < 9e15) {
    std::snprintf(buf, sizeof buf, "%.0f", x);
  } else {
    std::snprintf(buf, sizeof buf, "%.17g", x);
  }
  return buf;
}

}  // namespace

double parse_timestamp(const std::string& raw) {
  const std::string text = trim(raw);
  if (text.empty()) throw DataError("empty timestamp");

  // Plain epoch seconds.
  bool numeric = true;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (!(std::isdigit(static_cast<unsigned char>(c)) || (i == 0 && c == '-'))) numeric = false;
  }
  if (numeric) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      throw DataError("bad integer timestamp '" + text + "'");
    }
    return static_cast<double>(v);
  }

  auto bad = [&]() { return DataError("unrecognized timestamp '" + text + "'"); };
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  if (text.size() < 10 || text[4] != '-' || text[7] != '-' || !parse_int(text, 0, 4, y) ||
      !parse_int(text, 5, 2, mo) || !parse_int(text, 8, 2, d)) {
    throw bad();
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw bad();
  double frac = 0.0;
  double offset = 0.0;
  std::size_t pos = 10;
  if (pos < text.size()) {
    if ((text[pos] != 'T' && text[pos] != ' ') || text.size() < pos + 9 || text[pos + 3] != ':' ||
        text[pos + 6] != ':' || !parse_int(text, pos + 1, 2, h) || !parse_int(text, pos + 4, 2, mi) ||
        !parse_int(text, pos + 7, 2, sec) || h > 23 || mi > 59 || sec > 60) {
      throw bad();
    }
    pos += 9;
    if (pos < text.size() && text[pos] == '.') {
      std::size_t end = pos + 1;
      while (end < text.size() && std::isdigit(static_cast<unsigned char>(text[end]))) ++end;
      if (end == pos + 1 || !parse_double("0" + text.substr(pos, end - pos), frac)) throw bad();
      pos = end;
    }
    if (pos < text.size()) {
      if (text[pos] == 'Z' && pos + 1 == text.size()) {
        pos += 1;
      } else if ((text[pos] == '+' || text[pos] == '-') && text.size() == pos + 6 &&
                 text[pos + 3] == ':') {
        int oh = 0, om = 0;
        if (!parse_int(text, pos + 1, 2, oh) || !parse_int(text, pos + 4, 2, om)) throw bad();
        offset = (text[pos] == '+' ? 1.0 : -1.0) * (oh * 3600.0 + om * 60.0);
        pos = text.size();
      } else {
        throw bad();
      }
    }
  }
  const auto days = sys_days(ymd).time_since_epoch().count();
  return static_cast<double>(days) * 86400.0 + h * 3600.0 + mi * 60.0 + sec + frac - offset;
}

PriceSeries parse_csv(std::istream& in, const CsvSchema& schema, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    header = split(t);
    break;
  }
  if (header.empty()) throw DataError(source + ": empty file (no header row)");

  long ts_col = -1, rate_col = -1;
  std::vector<std::size_t> price_cols;
  PriceSeries series;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& h = header[c];
    if (h == schema.timestamp_column) {
      ts_col = static_cast<long>(c);
    } else if (h == schema.rate_column) {
      rate_col = static_cast<long>(c);
    } else if (h.rfind(schema.price_prefix, 0) == 0 && h.size() > schema.price_prefix.size()) {
      price_cols.push_back(c);
      series.asset_names.push_back(h.substr(schema.price_prefix.size()));
    } else {
      throw DataError(source + ": line " + std::to_string(line_no) + ": unknown column '" + h + "'");
    }
  }
  if (ts_col < 0) throw DataError(source + ": missing '" + schema.timestamp_column + "' column");
  if (price_cols.empty()) {
    throw DataError(source + ": no '" + schema.price_prefix + "<name>' price columns");
  }

  std::vector<std::vector<double>> rows;
  std::vector<double> rates;
  std::vector<std::string> problems;
  auto problem = [&](std::size_t ln, const std::string& msg) {
    problems.push_back("line " + std::to_string(ln) + ": " + msg);
  };
  std::size_t last_line = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto cells = split(t);
    if (cells.size() != header.size()) {
      problem(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(cells.size()));
      continue;
    }
    double ts = 0.0;
    try {
      ts = parse_timestamp(cells[static_cast<std::size_t>(ts_col)]);
    } catch (const DataError& e) {
      problem(line_no, e.what());
      continue;
    }
    if (!series.timestamps.empty() && !(ts > series.timestamps.back())) {
      problem(line_no, ts == series.timestamps.back()
                           ? "duplicate timestamp (same as line " + std::to_string(last_line) + ")"
                           : "timestamp not increasing (previous at line " +
                                 std::to_string(last_line) + ")");
      continue;
    }
    std::vector<double> row(price_cols.size());
    bool ok = true;
    for (std::size_t i = 0; i < price_cols.size(); ++i) {
      const std::string& cell = cells[price_cols[i]];
      double v = 0.0;
      if (!parse_double(cell, v)) {
        problem(line_no, "missing or malformed price '" + cell + "' in column " + header[price_cols[i]]);
        ok = false;
      } else if (!(v > 0.0) || !std::isfinite(v)) {
        problem(line_no, "non-positive price " + cell + " in column " + header[price_cols[i]]);
        ok = false;
      } else {
        row[i] = v;
      }
    }
    double r = 0.0;
    if (rate_col >= 0) {
      const std::string& cell = cells[static_cast<std::size_t>(rate_col)];
      if (!parse_double(cell, r) || !std::isfinite(r)) {
        problem(line_no, "missing or malformed rate '" + cell + "'");
        ok = false;
      } else if (r < 0.0) {
        problem(line_no, "negative rate " + cell);
        ok = false;
      }
    }
    if (!ok) continue;
    series.timestamps.push_back(ts);
    rows.push_back(std::move(row));
    if (rate_col >= 0) rates.push_back(r);
    last_line = line_no;
  }

  if (!problems.empty()) {
    std::ostringstream os;
    os << source << ": " << problems.size() << " invalid row(s)";
    for (std::size_t i = 0; i < problems.size() && i < 10; ++i) os << "\n  " << problems[i];
    if (problems.size() > 10) os << "\n  ...";
    throw DataError(os.str());
  }
  if (rows.empty()) throw DataError(source + ": empty file (no data rows)");

  series.prices.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(price_cols.size()));
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (std::size_t i = 0; i < price_cols.size(); ++i)
      series.prices(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = rows[k][i];
  if (rate_col >= 0) series.rates = std::move(rates);
  series.validate();
  return series;
}

PriceSeries load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_csv(in, schema, path.string());
}

void write_csv(std::ostream& os, const PriceSeries& series, const CsvSchema& schema) {
  os << schema.timestamp_column;
  for (const auto& name : series.asset_names) os << ',' << schema.price_prefix << name;
  if (series.rates) os << ',' << schema.rate_column;
  os << '\n';
  char buf[64];
  for (std::size_t k = 0; k < series.rows(); ++k) {
    os << num(series.timestamps[k]);
    for (Eigen::Index i = 0; i < series.assets(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", series.prices(static_cast<Eigen::Index>(k), i));
      os << ',' << buf;
    }
    if (series.rates) {
      std::snprintf(buf, sizeof buf, "%.17g", (*series.rates)[k]);
      os << ',' << buf;
    }
    os << '\n';
  }
}

PriceSeries series_from_path(const MarketPath& path, std::vector<std::string> names,
                             double start_epoch, bool include_rates) {
  if (static_cast<Eigen::Index>(names.size()) != path.assets()) {
    throw std::invalid_argument("series_from_path: one name per asset required");
  }
  PriceSeries s;
  s.asset_names = std::move(names);
  s.prices = path.prices;
  s.timestamps.resize(path.grid.nodes());
  for (std::size_t k = 0; k < path.grid.nodes(); ++k) {
    s.timestamps[k] = start_epoch + std::round(path.grid.time(k) * kSecondsPerYear);
  }
  if (include_rates) s.rates = path.rate_path;
  s.validate();
  return s;
}

MarketPath to_market_path(const PriceSeries& series, RateSource rate) {
  series.validate();
  const std::size_t rows = series.rows();
  if (rows < 2) throw DataError("to_market_path: need at least 2 rows, got " + std::to_string(rows));
  std::vector<double> times(rows);
  for (std::size_t k = 0; k < rows; ++k) {
    times[k] = (series.timestamps[k] - series.timestamps[0]) / kSecondsPerYear;
  }
  MarketPath path;
  path.grid = TimeGrid::from_times(std::move(times));
  path.prices = series.prices;
  path.rate_path.resize(rows);
  if (rate.kind == RateSource::Kind::column) {
    if (!series.rates) throw DataError("to_market_path: series has no rate column");
    path.rate_path = *series.rates;
  } else {
    if (!(rate.value >= 0.0) || !std::isfinite(rate.value)) {
      throw DataError("to_market_path: constant rate must be finite and >= 0");
    }
    std::fill(path.rate_path.begin(), path.rate_path.end(), rate.value);
  }
  path.money_market.resize(rows);
  path.money_market[0] = 1.0;
  double log_m = 0.0;
  for (std::size_t k = 0; k + 1 < rows; ++k) {
    log_m += path.rate_path[k] * path.grid.dt(k);
    path.money_market[k + 1] = std::exp(log_m);
  }
  path.cov_increments = realized_covariation_matrix(path.prices);
  return path;
}

BacktestResult backtest_funding(const PriceSeries& series, const Payoff& payoff, RateKind kind,
                                std::optional<RateSource> rate, const DiscountOptions& discount) {
  if (payoff.arity() != series.assets()) {
    throw std::invalid_argument("backtest: payoff arity " + std::to_string(payoff.arity()) +
                                " does not match " + std::to_string(series.assets()) + " assets");
  }
  BacktestResult out;
  BacktestSummary& sum = out.summary;
  sum.kind = kind;
  if (!rate) {
    if (series.rates) {
      rate = RateSource::column();
    } else {
      rate = RateSource::constant(0.0);
      sum.notices.push_back("NOTICE: no money-market/rate data; assuming r = 0");
    }
  }
  out.path = to_market_path(series, *rate);
  const RateSeries funding = funding_rate_modelfree(payoff, out.path);
  out.rates = kind == RateKind::funding
                  ? funding
                  : discount_from_funding(funding, payoff, out.path.prices, discount);

  sum.intervals = out.path.steps();
  sum.horizon_years = out.path.grid.horizon();
  sum.total_integral = out.rates.integral.back();
  sum.mean_rate = sum.total_integral / sum.horizon_years;
  sum.discount_factor_horizon =
      kind == RateKind::discount ? out.rates.discount_factor.back() : 1.0;
  sum.long_side_pnl.resize(out.path.grid.nodes());
  for (std::size_t k = 0; k < sum.long_side_pnl.size(); ++k) {
    sum.long_side_pnl[k] = long_side_pnl(payoff, out.path, out.rates, k);
  }
  return out;
}

}  // namespace perplab
