#include "satcs/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "satcs/io.hpp"
#include "satcs/rng.hpp"

namespace satcs {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

// Accepts plain numbers and a/b fractions.
double parse_grid_value(const std::string& tok) {
  const auto slash = tok.find('/');
  if (slash == std::string::npos) return parse_double(tok);
  const double den = parse_double(trim(tok.substr(slash + 1)));
  if (den == 0.0) throw std::invalid_argument("zero denominator in '" + tok + "'");
  return parse_double(trim(tok.substr(0, slash))) / den;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument("not a boolean: '" + s + "'");
}

Index parse_count(const std::string& s) {
  const double v = parse_double(s);
  if (v != std::floor(v) || v < 0) throw std::invalid_argument("not a count: '" + s + "'");
  return static_cast<Index>(v);
}

std::string sanitize_flag(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  return s;
}

int estimator_rank(EstimatorKind k) { return static_cast<int>(k); }

AmplitudeDist::Kind amplitude_from_string(const std::string& s) {
  if (s == "gaussian") return AmplitudeDist::Kind::gaussian;
  if (s == "uniform") return AmplitudeDist::Kind::uniform;
  if (s == "rademacher") return AmplitudeDist::Kind::rademacher;
  throw std::invalid_argument("unknown amplitude distribution '" + s + "'");
}

std::string to_string(AmplitudeDist::Kind k) {
  switch (k) {
    case AmplitudeDist::Kind::gaussian: return "gaussian";
    case AmplitudeDist::Kind::uniform: return "uniform";
    case AmplitudeDist::Kind::rademacher: return "rademacher";
  }
  return "?";
}

}  // namespace

std::string to_string(Axis a) {
  switch (a) {
    case Axis::measurements: return "measurements";
    case Axis::sparsity: return "sparsity";
    case Axis::noise: return "noise";
    case Axis::saturation: return "saturation";
  }
  return "?";
}

Axis axis_from_string(const std::string& s) {
  for (auto a : {Axis::measurements, Axis::sparsity, Axis::noise, Axis::saturation})
    if (to_string(a) == s) return a;
  throw std::invalid_argument("unknown axis '" + s + "'");
}

std::string to_string(LmRule r) { return r == LmRule::crossval ? "crossval" : "discrepancy"; }

LmRule lm_rule_from_string(const std::string& s) {
  if (s == "crossval") return LmRule::crossval;
  if (s == "discrepancy") return LmRule::discrepancy;
  throw std::invalid_argument("unknown LM lambda rule '" + s + "'");
}

SweepSpec SweepSpec::defaults(Axis axis) {
  SweepSpec spec;
  spec.axis = axis;
  switch (axis) {
    case Axis::measurements:
      for (int m = 30; m <= 250; m += 10) spec.grid.push_back(m);
      break;
    case Axis::sparsity:
      spec.grid = {0.05, 0.1, 0.15, 0.2};
      break;
    case Axis::noise:
      spec.grid = {0.01, 0.02, 0.04, 0.06, 0.08, 0.1, 0.12, 0.14, 0.16, 0.18, 0.2};
      break;
    case Axis::saturation:
      for (int k = 0; k <= 50; k += 5) spec.grid.push_back(k / 150.0);
      break;
  }
  return spec;
}

void SweepSpec::validate() const {
  if (grid.empty()) throw std::invalid_argument("SweepSpec: grid is empty");
  if (trials < 1) throw std::invalid_argument("SweepSpec: trials must be >= 1");
  if (estimators.empty()) throw std::invalid_argument("SweepSpec: no estimators selected");
  if (fixed.n < 1) throw std::invalid_argument("SweepSpec: n must be positive");
  for (double v : grid) {
    const InstanceConfig c = cell_config(*this, v);
    if (c.m < 1) throw std::invalid_argument("SweepSpec: m must be positive");
    if (c.s < 1 || c.s > c.n) throw std::invalid_argument("SweepSpec: need 1 <= s <= n");
    if (!(c.f_sat >= 0 && c.f_sat < 1)) throw std::invalid_argument("SweepSpec: need 0 <= f_sat < 1");
    if (!(c.f_sigma > 0)) throw std::invalid_argument("SweepSpec: f_sigma must be positive");
  }
}

InstanceConfig cell_config(const SweepSpec& spec, double v) {
  InstanceConfig c = spec.fixed;
  switch (spec.axis) {
    case Axis::measurements:
      if (v != std::floor(v)) throw std::invalid_argument("measurements axis needs integer values");
      c.m = static_cast<Index>(v);
      break;
    case Axis::sparsity:
      c.s = std::max<Index>(1, static_cast<Index>(std::llround(v * static_cast<double>(c.n))));
      break;
    case Axis::noise:
      c.f_sigma = v;
      break;
    case Axis::saturation:
      c.f_sat = v;
      break;
  }
  return c;
}

Seed cell_seed(Seed seed0, double axis_value, int trial) {
  return derive_seed(seed0, axis_value, static_cast<std::uint64_t>(trial));
}

std::vector<SweepRecord> run_sweep(const SweepSpec& spec, const Progress& progress, const std::string& instance_dir) {
  spec.validate();
  std::vector<SweepRecord> out;
  const std::size_t total = spec.grid.size() * static_cast<std::size_t>(spec.trials);
  std::size_t done = 0;
  for (double v : spec.grid) {
    const InstanceConfig cfg = cell_config(spec, v);
    for (int t = 0; t < spec.trials; ++t) {
      const Seed seed = cell_seed(spec.seed0, v, t);
      const Instance inst = synthesize(cfg, seed);
      if (spec.save_instances) {
        const auto name = "instance-" + to_string(spec.axis) + "-" + format_double(v) + "-t" + std::to_string(t) + ".json";
        write_json_file((std::filesystem::path(instance_dir.empty() ? "." : instance_dir) / name).string(),
                        instance_to_json(inst, &cfg));
      }
      for (EstimatorKind kind : spec.estimators) {
        SweepRecord rec;
        rec.axis = spec.axis;
        rec.axis_value = v;
        rec.estimator = kind;
        rec.trial = t;
        rec.seed = seed;
        EstimatorSpec es;
        es.kind = kind;
        es.basis = cfg.basis;
        es.seed = derive_seed(seed, 4);
        if (kind == EstimatorKind::LM && spec.lm_rule == LmRule::discrepancy) es.lambda_rule = DiscrepancyLambda{};
        const auto t0 = std::chrono::steady_clock::now();
        try {
          const RecoveryResult r = recover(es, inst.A, inst.meas, inst.truth);
          rec.rrmse = r.rrmse;
          rec.lambda = r.lambda_used;
          rec.iters = r.total_iters;
          rec.flag = sanitize_flag(r.flag);
        } catch (const std::exception& e) {
          rec.rrmse = std::numeric_limits<double>::quiet_NaN();
          rec.lambda = std::numeric_limits<double>::quiet_NaN();
          rec.flag = sanitize_flag(std::string("error: ") + e.what());
        }
        if (spec.timing)
          rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        out.push_back(std::move(rec));
      }
      if (progress) progress(++done, total);
    }
  }
  sort_records(out);
  return out;
}

void sort_records(std::vector<SweepRecord>& records) {
  std::stable_sort(records.begin(), records.end(), [](const SweepRecord& a, const SweepRecord& b) {
    if (a.axis != b.axis) return a.axis < b.axis;
    if (a.axis_value != b.axis_value) return a.axis_value < b.axis_value;
    if (a.estimator != b.estimator) return estimator_rank(a.estimator) < estimator_rank(b.estimator);
    return a.trial < b.trial;
  });
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile_sorted: empty data");
  if (!(q >= 0 && q <= 1)) throw std::invalid_argument("quantile_sorted: q must lie in [0, 1]");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

std::vector<SummaryRow> aggregate(const std::vector<SweepRecord>& records) {
  if (records.empty()) throw std::invalid_argument("aggregate: no records");
  using Key = std::tuple<int, double, int>;
  std::map<Key, std::pair<std::vector<double>, int>> cells;
  for (const auto& r : records) {
    auto& cell = cells[{static_cast<int>(r.axis), r.axis_value, estimator_rank(r.estimator)}];
    if (r.flag.empty() && std::isfinite(r.rrmse))
      cell.first.push_back(r.rrmse);
    else
      ++cell.second;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<SummaryRow> out;
  for (auto& [key, cell] : cells) {
    auto& [vals, flagged] = cell;
    SummaryRow row;
    row.axis = static_cast<Axis>(std::get<0>(key));
    row.axis_value = std::get<1>(key);
    row.estimator = static_cast<EstimatorKind>(std::get<2>(key));
    row.count = static_cast<int>(vals.size());
    row.flagged = flagged;
    if (vals.empty()) {
      row.median = row.mean = row.p25 = row.p75 = nan;
    } else {
      std::sort(vals.begin(), vals.end());
      row.median = quantile_sorted(vals, 0.5);
      row.p25 = quantile_sorted(vals, 0.25);
      row.p75 = quantile_sorted(vals, 0.75);
      double sum = 0.0;
      for (double v : vals) sum += v;
      row.mean = sum / static_cast<double>(vals.size());
    }
    out.push_back(row);
  }
  return out;
}

void write_records_csv(std::ostream& os, const std::vector<SweepRecord>& records) {
  os << kRecordsHeader << '\n';
  for (const auto& r : records) {
    os << to_string(r.axis) << ',' << format_double(r.axis_value) << ',' << to_string(r.estimator) << ',' << r.trial
       << ',' << r.seed << ',' << format_double(r.rrmse) << ',' << format_double(r.lambda) << ',' << r.iters << ','
       << format_double(r.wall_ms) << ',' << r.flag << '\n';
  }
}

std::vector<SweepRecord> read_records_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || trim(line) != kRecordsHeader)
    throw std::invalid_argument("records.csv: unexpected header");
  std::vector<SweepRecord> out;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 10) throw std::invalid_argument("records.csv: line " + std::to_string(lineno) + " needs 10 fields");
    SweepRecord r;
    r.axis = axis_from_string(f[0]);
    r.axis_value = parse_double(f[1]);
    r.estimator = estimator_from_string(f[2]);
    r.trial = std::stoi(f[3]);
    r.seed = std::stoull(f[4]);
    r.rrmse = parse_double(f[5]);
    r.lambda = parse_double(f[6]);
    r.iters = std::stoi(f[7]);
    r.wall_ms = parse_double(f[8]);
    r.flag = f[9];
    out.push_back(std::move(r));
  }
  return out;
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << kSummaryHeader << '\n';
  for (const auto& r : rows) {
    os << to_string(r.axis) << ',' << format_double(r.axis_value) << ',' << to_string(r.estimator) << ',' << r.count
       << ',' << r.flagged << ',' << format_double(r.median) << ',' << format_double(r.mean) << ','
       << format_double(r.p25) << ',' << format_double(r.p75) << '\n';
  }
}

SweepSpec parse_sweep_config(std::istream& is) {
  std::vector<std::tuple<int, std::string, std::string>> pairs;
  std::string line;
  int lineno = 0;
  std::optional<Axis> axis;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "axis")
      axis = axis_from_string(value);
    else
      pairs.emplace_back(lineno, key, value);
  }

  SweepSpec spec = SweepSpec::defaults(axis.value_or(Axis::measurements));
  for (const auto& [ln, key, value] : pairs) {
    try {
      if (key == "grid") {
        spec.grid.clear();
        for (const auto& tok : split(value, ','))
          if (!tok.empty()) spec.grid.push_back(parse_grid_value(tok));
      } else if (key == "n") {
        spec.fixed.n = parse_count(value);
      } else if (key == "m") {
        spec.fixed.m = parse_count(value);
      } else if (key == "s") {
        spec.fixed.s = parse_count(value);
      } else if (key == "f_sat") {
        spec.fixed.f_sat = parse_grid_value(value);
      } else if (key == "f_sigma") {
        spec.fixed.f_sigma = parse_grid_value(value);
      } else if (key == "basis") {
        spec.fixed.basis = basis_from_string(value);
      } else if (key == "amplitude") {
        spec.fixed.amplitude.kind = amplitude_from_string(value);
      } else if (key == "amplitude_scale") {
        spec.fixed.amplitude.scale = parse_double(value);
      } else if (key == "trials") {
        spec.trials = static_cast<int>(parse_count(value));
      } else if (key == "estimators") {
        spec.estimators.clear();
        for (const auto& tok : split(value, ','))
          if (!tok.empty()) spec.estimators.push_back(estimator_from_string(tok));
      } else if (key == "seed") {
        spec.seed0 = std::stoull(value);
      } else if (key == "lm_lambda") {
        spec.lm_rule = lm_rule_from_string(value);
      } else if (key == "timing") {
        spec.timing = parse_bool(value);
      } else if (key == "save_instances") {
        spec.save_instances = parse_bool(value);
      } else {
        throw std::invalid_argument("unknown key '" + key + "'");
      }
    } catch (const std::exception& e) {
      throw std::invalid_argument("config line " + std::to_string(ln) + ": " + e.what());
    }
  }
  spec.validate();
  return spec;
}

void write_sweep_config(std::ostream& os, const SweepSpec& spec) {
  os << "axis = " << to_string(spec.axis) << '\n' << "grid = ";
  for (std::size_t i = 0; i < spec.grid.size(); ++i) os << (i ? ", " : "") << format_double(spec.grid[i]);
  os << '\n'
     << "n = " << spec.fixed.n << '\n'
     << "m = " << spec.fixed.m << '\n'
     << "s = " << spec.fixed.s << '\n'
     << "f_sat = " << format_double(spec.fixed.f_sat) << '\n'
     << "f_sigma = " << format_double(spec.fixed.f_sigma) << '\n'
     << "basis = " << to_string(spec.fixed.basis) << '\n'
     << "amplitude = " << to_string(spec.fixed.amplitude.kind) << '\n'
     << "amplitude_scale = " << format_double(spec.fixed.amplitude.scale) << '\n'
     << "trials = " << spec.trials << '\n'
     << "estimators = ";
  for (std::size_t i = 0; i < spec.estimators.size(); ++i) os << (i ? ", " : "") << to_string(spec.estimators[i]);
  os << '\n'
     << "seed = " << spec.seed0 << '\n'
     << "lm_lambda = " << to_string(spec.lm_rule) << '\n'
     << "timing = " << (spec.timing ? "true" : "false") << '\n'
     << "save_instances = " << (spec.save_instances ? "true" : "false") << '\n';
}

}  // namespace satcs
