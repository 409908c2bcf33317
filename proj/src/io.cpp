#include "satcs/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace satcs {

namespace {

std::vector<double> to_vec(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

VectorXd vec_from(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
}

IndexSet index_set(const Json& j) { return j.get<IndexSet>(); }

// JSON has no NaN; absent values are null.
Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

Json instance_to_json(const Instance& inst, const InstanceConfig* cfg) {
  Json j;
  j["format"] = "satcs-instance";
  j["version"] = 1;
  j["seed"] = inst.seed;
  j["n"] = inst.A.cols();
  j["m"] = inst.A.rows();
  j["basis"] = to_string(inst.truth.basis);
  if (cfg) j["config"] = {{"s", cfg->s}, {"f_sat", cfg->f_sat}, {"f_sigma", cfg->f_sigma}};
  j["truth"] = {{"coeffs", to_vec(inst.truth.coeffs)}, {"support", inst.truth.support}};
  Json rows = Json::array();
  for (Index i = 0; i < inst.A.rows(); ++i) rows.push_back(to_vec(inst.A.row(i).transpose()));
  j["A"] = std::move(rows);
  j["y"] = to_vec(inst.meas.y);
  j["tau"] = inst.meas.tau;
  j["sigma"] = inst.meas.sigma;
  j["s_plus"] = inst.meas.s_plus;
  j["s_minus"] = inst.meas.s_minus;
  j["s_ns"] = inst.meas.s_ns;
  return j;
}

LoadedInstance instance_from_json(const Json& j) {
  LoadedInstance out;
  const auto& rows = j.at("A");
  if (!rows.is_array() || rows.empty()) throw std::invalid_argument("instance: A must be a non-empty array of rows");
  const auto m = static_cast<Index>(rows.size());
  const auto n = static_cast<Index>(rows.at(0).size());
  out.A.resize(m, n);
  for (Index i = 0; i < m; ++i) {
    const VectorXd r = vec_from(rows.at(i));
    if (r.size() != n) throw std::invalid_argument("instance: ragged A");
    out.A.row(i) = r.transpose();
  }
  VectorXd y = vec_from(j.at("y"));
  if (y.size() != m) throw std::invalid_argument("instance: y length differs from A rows");
  out.meas = MeasurementSet::from_clipped(std::move(y), j.at("tau").get<double>(), j.at("sigma").get<double>());
  out.meas.validate();
  for (const char* key : {"s_plus", "s_minus", "s_ns"}) {
    if (!j.contains(key)) continue;
    const IndexSet& mine = key[2] == 'p' ? out.meas.s_plus : key[2] == 'm' ? out.meas.s_minus : out.meas.s_ns;
    if (index_set(j.at(key)) != mine)
      throw std::invalid_argument(std::string("instance: ") + key + " disagrees with y and tau");
  }
  out.seed = j.value("seed", Seed{0});
  if (j.contains("truth")) {
    SparseSignal t;
    t.basis = basis_from_string(j.value("basis", std::string("dct")));
    t.coeffs = vec_from(j.at("truth").at("coeffs"));
    if (t.coeffs.size() != n) throw std::invalid_argument("instance: truth length differs from n");
    for (Index k = 0; k < n; ++k)
      if (t.coeffs(k) != 0.0) t.support.push_back(k);
    out.truth = std::move(t);
  }
  return out;
}

Json to_json(const SolveTrace& t, bool with_objective) {
  Json j = {{"iters", t.iters},
            {"converged", t.converged},
            {"kkt_residual", number_or_null(t.kkt_residual)},
            {"lipschitz", t.lipschitz}};
  if (!t.objective_per_iter.empty()) j["final_objective"] = t.objective_per_iter.back();
  if (with_objective) j["objective_per_iter"] = t.objective_per_iter;
  return j;
}

Json to_json(const CvOutcome& cv) {
  Json curve = Json::array();
  for (const auto& p : cv.curve) curve.push_back({{"lambda", p.lambda}, {"holdout_error", p.holdout_error}});
  return {{"lambda", cv.lambda}, {"holdout_size", cv.holdout_size}, {"fallback", cv.fallback}, {"curve", curve}};
}

Json to_json(const RecoveryResult& r, bool with_objective) {
  Json j;
  j["estimator"] = to_string(r.kind);
  j["seed"] = r.seed;
  j["rrmse"] = number_or_null(r.rrmse);
  j["lambda"] = r.lambda_used;
  j["iters"] = r.total_iters;
  j["flag"] = r.flag;
  j["x_hat"] = to_vec(r.x_hat);
  j["theta_hat"] = to_vec(r.theta_hat);
  j["trace"] = to_json(r.trace, with_objective);
  if (r.cv) j["crossval"] = to_json(*r.cv);
  return j;
}

Json to_json(const BoundInputs& b) {
  return {{"s", b.s},         {"n", b.n},         {"m", b.m},   {"m1", b.m1},         {"m2", b.m2},
          {"m3", b.m3},       {"sigma", b.sigma}, {"gamma", b.gamma}, {"varrho", b.varrho}, {"c1", b.c1},
          {"alpha", b.alpha}, {"beta", b.beta}};
}

BoundInputs bound_inputs_from_json(const Json& j) {
  BoundInputs b;
  b.s = j.at("s").get<Index>();
  b.n = j.at("n").get<Index>();
  b.m1 = j.value("m1", Index{0});
  b.m2 = j.value("m2", Index{0});
  b.m3 = j.at("m3").get<Index>();
  b.m = j.value("m", b.m1 + b.m2 + b.m3);
  b.sigma = j.at("sigma").get<double>();
  b.gamma = j.at("gamma").get<double>();
  b.varrho = j.value("varrho", 3.0);
  b.c1 = j.value("c1", 0.0);
  b.alpha = j.value("alpha", 0.0);
  b.beta = j.value("beta", 0.0);
  return b;
}

Json to_json(const ErrorBound& e) { return {{"bound", e.main}, {"appendix_bound", e.appendix}}; }

Json to_json(const RscReport& r, bool with_audit) {
  Json j = {{"gamma_hat", r.gamma_hat},
            {"kappa_hat", r.kappa_hat},
            {"samples", r.samples},
            {"violations", r.violations},
            {"convexity_violations", r.convexity_violations},
            {"min_margin", number_or_null(r.min_margin)}};
  if (with_audit) {
    Json audit = Json::array();
    for (const auto& v : r.audit)
      audit.push_back({{"sample", v.sample}, {"delta_l", v.delta_l}, {"required", v.required}, {"delta", to_vec(v.delta)}});
    j["audit"] = std::move(audit);
  }
  return j;
}

Json to_json(const GradNormProbe& p) {
  return {{"grad_inf", p.grad_inf}, {"thm3_magnitude", p.thm3_magnitude}, {"saturated_term", p.saturated_term}};
}

Json to_json(const BoundComparison& c) {
  return {{"seed", c.seed},         {"f_sat", c.f_sat},           {"err_sq", c.err_sq},
          {"rrmse_sq", c.rrmse_sq}, {"bound", c.bound},           {"gamma_hat", c.gamma_hat},
          {"c1", c.c1},             {"lambda", c.lambda},         {"grad_inf", c.grad_inf},
          {"precondition", c.precondition}};
}

void write_bound_compare_csv(std::ostream& os, const std::vector<BoundComparison>& rows) {
  os << kBoundCompareHeader << '\n';
  for (const auto& r : rows) {
    const double scale = r.truth_norm_sq > 0 ? r.truth_norm_sq : 1.0;
    os << r.seed << ',' << format_double(r.f_sat) << ',' << format_double(r.rrmse_sq) << ','
       << format_double(r.bound / scale) << ',' << format_double(r.gamma_hat) << ',' << format_double(r.c1) << '\n';
  }
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return Json::parse(in);
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace satcs
