#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "satcs/bench.hpp"
#include "satcs/estimators.hpp"
#include "satcs/io.hpp"
#include "satcs/rng.hpp"
#include "satcs/theory.hpp"

namespace fs = std::filesystem;
using namespace satcs;

namespace {

void emit(const Json& j, const std::string& out) {
  if (out.empty() || out == "-")
    std::cout << j.dump(2) << '\n';
  else
    write_json_file(out, j);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ','))
    if (!tok.empty()) out.push_back(tok);
  return out;
}

double parse_fraction(const std::string& tok) {
  const auto slash = tok.find('/');
  if (slash == std::string::npos) return parse_double(tok);
  return parse_double(tok.substr(0, slash)) / parse_double(tok.substr(slash + 1));
}

struct SynthOptions {
  InstanceConfig cfg;
  std::string basis = "dct";
  Seed seed = 1;

  void add(CLI::App* app) {
    app->add_option("--n", cfg.n, "signal dimension")->capture_default_str();
    app->add_option("--m", cfg.m, "measurements")->capture_default_str();
    app->add_option("--s", cfg.s, "sparsity")->capture_default_str();
    app->add_option("--fsat", cfg.f_sat, "saturated fraction")->capture_default_str();
    app->add_option("--fsigma", cfg.f_sigma, "noise level relative to mean |Ax|")->capture_default_str();
    app->add_option("--basis", basis, "dct | canonical")->capture_default_str();
    app->add_option("--seed", seed, "instance seed")->capture_default_str();
  }

  InstanceConfig resolved() const {
    InstanceConfig c = cfg;
    c.basis = basis_from_string(basis);
    return c;
  }
};

LoadedInstance load_instance(const std::string& path) { return instance_from_json(read_json_file(path)); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse recovery from saturated compressive measurements"};
  app.require_subcommand(1);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "run an experiment sweep and write records.csv / summary.csv");
  std::string config_path, axis, grid, estimators, out_dir = ".", lm_lambda;
  std::optional<Index> n, m, s;
  std::optional<double> fsat, fsigma;
  std::optional<int> trials;
  std::optional<Seed> sweep_seed;
  bool timing = false, save_instances = false, quiet = false;
  sweep->add_option("--config", config_path, "key = value sweep file");
  sweep->add_option("--axis", axis, "measurements | sparsity | noise | saturation");
  sweep->add_option("--grid", grid, "comma-separated axis values (a/b fractions allowed)");
  sweep->add_option("--n", n);
  sweep->add_option("--m", m);
  sweep->add_option("--s", s);
  sweep->add_option("--fsat", fsat);
  sweep->add_option("--fsigma", fsigma);
  sweep->add_option("--trials", trials);
  sweep->add_option("--estimators", estimators, "comma-separated subset of LM,SR,SC,SS,SI");
  sweep->add_option("--seed", sweep_seed, "base seed");
  sweep->add_option("--lm-lambda", lm_lambda, "crossval | discrepancy");
  sweep->add_option("--out", out_dir, "output directory")->capture_default_str();
  sweep->add_flag("--timing", timing, "record wall-clock time per recovery");
  sweep->add_flag("--save-instances", save_instances, "write instance-*.json for every cell");
  sweep->add_flag("--quiet", quiet);

  // synth
  auto* synth = app.add_subcommand("synth", "draw one instance and write it as JSON");
  SynthOptions synth_opt;
  synth_opt.add(synth);
  std::string synth_out;
  synth->add_option("--out", synth_out, "output file (default stdout)");

  // solve
  auto* solve = app.add_subcommand("solve", "recover one instance from a JSON file");
  std::string solve_in, solve_out, solve_est = "LM", solve_rule = "crossval", solve_basis;
  double solve_lambda = -1;
  Seed solve_seed = 0;
  bool solve_trace = false;
  solve->add_option("instance", solve_in, "instance JSON")->required();
  solve->add_option("--estimator", solve_est, "LM | SR | SC | SS | SI")->capture_default_str();
  solve->add_option("--lambda", solve_lambda, "fixed lambda (LM, SS)");
  solve->add_option("--lambda-rule", solve_rule, "crossval | discrepancy")->capture_default_str();
  solve->add_option("--basis", solve_basis, "override the instance basis");
  solve->add_option("--seed", solve_seed, "holdout seed")->capture_default_str();
  solve->add_option("--out", solve_out, "output file (default stdout)");
  solve->add_flag("--trace", solve_trace, "include the objective per iteration");

  // bound
  auto* bound = app.add_subcommand("bound", "evaluate the error bound from BoundInputs JSON");
  std::string bound_in, bound_out;
  bound->add_option("inputs", bound_in, "BoundInputs JSON")->required();
  bound->add_option("--out", bound_out);

  // rsc-check
  auto* rsc = app.add_subcommand("rsc-check", "sample the restricted strong convexity inequality");
  SynthOptions rsc_opt;
  rsc_opt.cfg = {32, 24, 3, 0.15, 0.1, Basis::canonical, {}};
  rsc_opt.basis = "canonical";
  rsc_opt.add(rsc);
  std::string rsc_in, rsc_out;
  int rsc_samples = 10000;
  double rsc_varrho = 3.0;
  rsc->add_option("--instance", rsc_in, "instance JSON with truth (overrides synthesis)");
  rsc->add_option("--samples", rsc_samples)->capture_default_str();
  rsc->add_option("--varrho", rsc_varrho)->capture_default_str();
  rsc->add_option("--out", rsc_out);

  // crossval
  auto* cv = app.add_subcommand("crossval", "cross-validated lambda for LM or SS");
  std::string cv_in, cv_out, cv_est = "LM", cv_basis;
  Seed cv_seed = 0;
  cv->add_option("instance", cv_in, "instance JSON")->required();
  cv->add_option("--estimator", cv_est)->capture_default_str();
  cv->add_option("--basis", cv_basis, "override the instance basis");
  cv->add_option("--seed", cv_seed)->capture_default_str();
  cv->add_option("--out", cv_out);

  // bound-compare
  auto* bc = app.add_subcommand("bound-compare", "error bound against observed LM error over seeds");
  BoundCompareConfig bc_cfg;
  std::string bc_fsat = "0.15", bc_out;
  int bc_count = 20;
  Seed bc_seed0 = 1;
  bc->add_option("--n", bc_cfg.instance.n)->capture_default_str();
  bc->add_option("--m", bc_cfg.instance.m)->capture_default_str();
  bc->add_option("--s", bc_cfg.instance.s)->capture_default_str();
  bc->add_option("--fsigma", bc_cfg.instance.f_sigma)->capture_default_str();
  bc->add_option("--fsat", bc_fsat, "comma-separated saturated fractions")->capture_default_str();
  bc->add_option("--count", bc_count, "instances per f_sat")->capture_default_str();
  bc->add_option("--seed", bc_seed0)->capture_default_str();
  bc->add_option("--rec-samples", bc_cfg.rec_samples)->capture_default_str();
  bc->add_option("--out", bc_out, "CSV file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sweep->parsed()) {
      SweepSpec spec;
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw std::runtime_error("cannot open " + config_path);
        spec = parse_sweep_config(in);
      } else {
        spec = SweepSpec::defaults(axis.empty() ? Axis::measurements : axis_from_string(axis));
      }
      if (!axis.empty() && axis_from_string(axis) != spec.axis) {
        const auto keep = spec;
        spec = SweepSpec::defaults(axis_from_string(axis));
        spec.fixed = keep.fixed;
        spec.trials = keep.trials;
        spec.estimators = keep.estimators;
        spec.seed0 = keep.seed0;
        spec.lm_rule = keep.lm_rule;
      }
      if (!grid.empty()) {
        spec.grid.clear();
        for (const auto& tok : split_list(grid)) spec.grid.push_back(parse_fraction(tok));
      }
      if (n) spec.fixed.n = *n;
      if (m) spec.fixed.m = *m;
      if (s) spec.fixed.s = *s;
      if (fsat) spec.fixed.f_sat = *fsat;
      if (fsigma) spec.fixed.f_sigma = *fsigma;
      if (trials) spec.trials = *trials;
      if (sweep_seed) spec.seed0 = *sweep_seed;
      if (!estimators.empty()) {
        spec.estimators.clear();
        for (const auto& tok : split_list(estimators)) spec.estimators.push_back(estimator_from_string(tok));
      }
      if (!lm_lambda.empty()) spec.lm_rule = lm_rule_from_string(lm_lambda);
      spec.timing = spec.timing || timing;
      spec.save_instances = spec.save_instances || save_instances;
      spec.validate();

      fs::create_directories(out_dir);
      Progress progress;
      if (!quiet)
        progress = [](std::size_t done, std::size_t total) {
          std::cerr << "\rcells " << done << "/" << total << std::flush;
          if (done == total) std::cerr << '\n';
        };
      const auto records = run_sweep(spec, progress, out_dir);
      {
        std::ofstream f(fs::path(out_dir) / "records.csv");
        write_records_csv(f, records);
      }
      {
        std::ofstream f(fs::path(out_dir) / "summary.csv");
        write_summary_csv(f, aggregate(records));
      }
      {
        std::ofstream f(fs::path(out_dir) / "sweep.cfg");
        write_sweep_config(f, spec);
      }
      if (!quiet) std::cerr << "wrote " << records.size() << " records to " << out_dir << '\n';
    } else if (synth->parsed()) {
      const InstanceConfig cfg = synth_opt.resolved();
      emit(instance_to_json(synthesize(cfg, synth_opt.seed), &cfg), synth_out);
    } else if (solve->parsed()) {
      const LoadedInstance inst = load_instance(solve_in);
      EstimatorSpec spec;
      spec.kind = estimator_from_string(solve_est);
      spec.seed = solve_seed;
      spec.basis = !solve_basis.empty() ? basis_from_string(solve_basis)
                   : inst.truth           ? inst.truth->basis
                                          : Basis::dct;
      if (solve_lambda >= 0)
        spec.lambda_rule = FixedLambda{solve_lambda};
      else if (solve_rule == "discrepancy")
        spec.lambda_rule = DiscrepancyLambda{};
      else if (solve_rule != "crossval")
        throw std::invalid_argument("unknown lambda rule '" + solve_rule + "'");
      const RecoveryResult r =
          inst.truth ? recover(spec, inst.A, inst.meas, *inst.truth) : recover(spec, inst.A, inst.meas);
      emit(to_json(r, solve_trace), solve_out);
    } else if (bound->parsed()) {
      const BoundInputs b = bound_inputs_from_json(read_json_file(bound_in));
      Json j = to_json(thm4_bound(b));
      j["lambda"] = thm4_lambda(b);
      j["inputs"] = to_json(b);
      emit(j, bound_out);
    } else if (rsc->parsed()) {
      MatrixXd A;
      MeasurementSet meas;
      VectorXd x_star;
      Seed seed = rsc_opt.seed;
      if (!rsc_in.empty()) {
        LoadedInstance inst = load_instance(rsc_in);
        if (!inst.truth) throw std::invalid_argument("rsc-check needs an instance with a truth signal");
        A = inst.A * synthesis_matrix(inst.truth->basis, inst.A.cols());
        meas = std::move(inst.meas);
        x_star = inst.truth->coeffs;
        seed = inst.seed;
      } else {
        const InstanceConfig cfg = rsc_opt.resolved();
        Instance inst = synthesize(cfg, seed);
        A = inst.A * synthesis_matrix(cfg.basis, cfg.n);
        meas = std::move(inst.meas);
        x_star = inst.truth.coeffs;
      }
      const RscReport rep = rsc_check(A, meas, x_star, rsc_samples, derive_seed(seed, 21));
      Json j = to_json(rep);
      const double c1 = c1_recipe(A, meas, x_star.minCoeff(), x_star.maxCoeff());
      j["gradient"] = to_json(grad_norm_probe(A, meas, x_star, rsc_varrho, c1));
      j["c1"] = c1;
      emit(j, rsc_out);
    } else if (cv->parsed()) {
      const LoadedInstance inst = load_instance(cv_in);
      EstimatorSpec spec;
      spec.kind = estimator_from_string(cv_est);
      spec.basis = !cv_basis.empty() ? basis_from_string(cv_basis)
                   : inst.truth      ? inst.truth->basis
                                     : Basis::dct;
      emit(to_json(crossval_lambda(spec, inst.A, inst.meas, cv_seed)), cv_out);
    } else if (bc->parsed()) {
      std::vector<BoundComparison> rows;
      for (const auto& tok : split_list(bc_fsat)) {
        bc_cfg.instance.f_sat = parse_fraction(tok);
        for (int k = 0; k < bc_count; ++k)
          rows.push_back(bound_compare(bc_cfg, derive_seed(bc_seed0, bc_cfg.instance.f_sat, k)));
      }
      if (bc_out.empty()) {
        write_bound_compare_csv(std::cout, rows);
      } else {
        std::ofstream f(bc_out);
        write_bound_compare_csv(f, rows);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
