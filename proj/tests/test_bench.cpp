#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "satcs/bench.hpp"
#include "satcs/io.hpp"

using namespace satcs;

namespace {

SweepRecord record(double axis_value, EstimatorKind k, int trial, double rrmse, std::string flag = "") {
  SweepRecord r;
  r.axis = Axis::saturation;
  r.axis_value = axis_value;
  r.estimator = k;
  r.trial = trial;
  r.seed = 100 + trial;
  r.rrmse = rrmse;
  r.lambda = 0.5;
  r.iters = 10;
  r.flag = std::move(flag);
  return r;
}

SweepSpec small_spec() {
  SweepSpec spec = SweepSpec::defaults(Axis::saturation);
  spec.grid = {0.0, 0.2};
  spec.fixed.n = 64;
  spec.fixed.m = 48;
  spec.fixed.s = 4;
  spec.trials = 2;
  spec.estimators = {EstimatorKind::LM, EstimatorKind::SI, EstimatorKind::SS};
  return spec;
}

std::string csv_of(const std::vector<SweepRecord>& recs) {
  std::ostringstream os;
  write_records_csv(os, recs);
  return os.str();
}

}  // namespace

TEST_CASE("quantiles of a hand-built five-record set") {
  std::vector<SweepRecord> recs;
  const double vals[] = {0.5, 0.1, 0.3, 0.9, 0.2};
  for (int t = 0; t < 5; ++t) recs.push_back(record(0.1, EstimatorKind::LM, t, vals[t]));
  const auto rows = aggregate(recs);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].count == 5);
  CHECK(rows[0].flagged == 0);
  CHECK(rows[0].median == doctest::Approx(0.3));
  CHECK(rows[0].mean == doctest::Approx(0.4));
  CHECK(rows[0].p25 == doctest::Approx(0.2));
  CHECK(rows[0].p75 == doctest::Approx(0.5));
}

TEST_CASE("quantiles interpolate between order statistics") {
  const std::vector<double> v{1, 2, 3, 4};
  CHECK(quantile_sorted(v, 0.25) == doctest::Approx(1.75));
  CHECK(quantile_sorted(v, 0.5) == doctest::Approx(2.5));
  CHECK(quantile_sorted(v, 0.75) == doctest::Approx(3.25));
  CHECK(quantile_sorted(v, 0.0) == 1);
  CHECK(quantile_sorted(v, 1.0) == 4);
  CHECK_THROWS_AS(quantile_sorted({}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(quantile_sorted(v, 1.5), std::invalid_argument);
}

TEST_CASE("degenerate aggregates") {
  const auto one = aggregate({record(0, EstimatorKind::SC, 0, 0.42)});
  REQUIRE(one.size() == 1);
  CHECK(one[0].median == 0.42);
  CHECK(one[0].mean == 0.42);
  CHECK(one[0].p25 == 0.42);
  CHECK(one[0].p75 == 0.42);

  std::vector<SweepRecord> same;
  for (int t = 0; t < 7; ++t) same.push_back(record(0, EstimatorKind::SI, t, 0.25));
  const auto rows = aggregate(same);
  CHECK(rows[0].p75 - rows[0].p25 == 0.0);
  CHECK(rows[0].median == 0.25);
  CHECK_THROWS_AS(aggregate({}), std::invalid_argument);
}

TEST_CASE("flagged records never reach the statistics") {
  std::vector<SweepRecord> recs{record(0, EstimatorKind::SR, 0, 0.1), record(0, EstimatorKind::SR, 1, 0.3),
                                record(0, EstimatorKind::SR, 2, 50.0, "infeasible"),
                                record(0, EstimatorKind::SR, 3, std::nan(""), "error: no usable measurements")};
  const auto rows = aggregate(recs);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].count == 2);
  CHECK(rows[0].flagged == 2);
  CHECK(rows[0].mean == doctest::Approx(0.2));

  const auto all_bad = aggregate({record(0, EstimatorKind::SR, 0, 1.0, "infeasible")});
  CHECK(all_bad[0].count == 0);
  CHECK(std::isnan(all_bad[0].median));
}

TEST_CASE("aggregate groups by axis value and estimator") {
  std::vector<SweepRecord> recs;
  for (double v : {0.2, 0.1})
    for (EstimatorKind k : {EstimatorKind::SI, EstimatorKind::LM})
      for (int t = 0; t < 3; ++t) recs.push_back(record(v, k, t, v + t));
  const auto rows = aggregate(recs);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].axis_value == 0.1);
  CHECK(rows[0].estimator == EstimatorKind::LM);
  CHECK(rows[1].estimator == EstimatorKind::SI);
  CHECK(rows[3].axis_value == 0.2);
  CHECK(rows[0].median == doctest::Approx(1.1));
}

TEST_CASE("default grids") {
  CHECK(SweepSpec::defaults(Axis::measurements).grid.size() == 23);
  CHECK(SweepSpec::defaults(Axis::measurements).grid.front() == 30);
  CHECK(SweepSpec::defaults(Axis::measurements).grid.back() == 250);
  CHECK(SweepSpec::defaults(Axis::sparsity).grid.size() == 4);
  CHECK(SweepSpec::defaults(Axis::noise).grid.size() == 11);
  CHECK(SweepSpec::defaults(Axis::saturation).grid.size() == 11);
  CHECK(SweepSpec::defaults(Axis::saturation).grid.back() == doctest::Approx(50.0 / 150));
  const SweepSpec d = SweepSpec::defaults(Axis::noise);
  CHECK(d.fixed.n == 256);
  CHECK(d.fixed.m == 150);
  CHECK(d.fixed.s == 25);
  CHECK(d.fixed.f_sat == doctest::Approx(0.15));
  CHECK(d.fixed.f_sigma == doctest::Approx(0.1));
  CHECK(d.trials == 10);
  CHECK(d.estimators.size() == 5);
}

TEST_CASE("cell configuration") {
  SweepSpec sp = SweepSpec::defaults(Axis::sparsity);
  CHECK(cell_config(sp, 0.1).s == 26);
  CHECK(cell_config(sp, 0.05).s == 13);
  sp = SweepSpec::defaults(Axis::measurements);
  CHECK(cell_config(sp, 90).m == 90);
  CHECK_THROWS_AS(cell_config(sp, 90.5), std::invalid_argument);
  sp = SweepSpec::defaults(Axis::noise);
  CHECK(cell_config(sp, 0.04).f_sigma == 0.04);
  sp = SweepSpec::defaults(Axis::saturation);
  CHECK(cell_config(sp, 0.2).f_sat == 0.2);
  CHECK(cell_config(sp, 0.2).m == 150);
}

TEST_CASE("cell seeds do not depend on the rest of the grid") {
  CHECK(cell_seed(2021, 0.1, 3) == cell_seed(2021, 0.1, 3));
  CHECK(cell_seed(2021, 0.1, 3) != cell_seed(2021, 0.1, 4));
  CHECK(cell_seed(2021, 0.1, 3) != cell_seed(2022, 0.1, 3));

  SweepSpec a = small_spec();
  a.estimators = {EstimatorKind::SI};
  SweepSpec b = a;
  b.grid = {0.0, 0.1, 0.2};
  const auto ra = run_sweep(a);
  const auto rb = run_sweep(b);
  for (const auto& r : ra) {
    bool found = false;
    for (const auto& q : rb)
      if (q.axis_value == r.axis_value && q.trial == r.trial) {
        CHECK(q.seed == r.seed);
        CHECK(q.rrmse == r.rrmse);
        found = true;
      }
    CHECK(found);
  }
}

TEST_CASE("sweep bookkeeping and determinism") {
  const SweepSpec spec = small_spec();
  const auto recs = run_sweep(spec);
  CHECK(recs.size() == spec.grid.size() * spec.estimators.size() * spec.trials);
  for (const auto& r : recs) {
    CHECK(r.flag.empty());
    CHECK(r.wall_ms == 0.0);
    CHECK(std::isfinite(r.rrmse));
    CHECK(r.seed == cell_seed(spec.seed0, r.axis_value, r.trial));
  }
  CHECK(csv_of(run_sweep(spec)) == csv_of(recs));

  std::size_t calls = 0, last = 0;
  run_sweep(spec, [&](std::size_t done, std::size_t total) {
    ++calls;
    last = done;
    CHECK(total == 4);
  });
  CHECK(calls == 4);
  CHECK(last == 4);
}

TEST_CASE("no saturation: discrepancy LM matches SI") {
  SweepSpec spec = SweepSpec::defaults(Axis::saturation);
  spec.grid = {0.0};
  spec.trials = 1;
  spec.estimators = {EstimatorKind::LM, EstimatorKind::SI};
  spec.lm_rule = LmRule::discrepancy;
  const auto recs = run_sweep(spec);
  REQUIRE(recs.size() == 2);
  CHECK(std::abs(recs[0].rrmse - recs[1].rrmse) <= 1e-4);
}

TEST_CASE("more measurements help LM") {
  SweepSpec spec = SweepSpec::defaults(Axis::measurements);
  spec.grid = {30, 250};
  spec.estimators = {EstimatorKind::LM};
  const auto rows = aggregate(run_sweep(spec));
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].median < rows[0].median);
}

TEST_CASE("estimator failures become flagged records") {
  SweepSpec spec = small_spec();
  spec.grid = {0.999};
  spec.trials = 1;
  spec.estimators = {EstimatorKind::SR, EstimatorKind::LM};
  const auto recs = run_sweep(spec);
  REQUIRE(recs.size() == 2);
  const SweepRecord& sr = recs[1];
  CHECK(sr.estimator == EstimatorKind::SR);
  CHECK(sr.flag.rfind("error:", 0) == 0);
  CHECK(sr.flag.find(',') == std::string::npos);
  CHECK(std::isnan(sr.rrmse));
  CHECK(recs[0].flag.empty());
  const auto rows = aggregate(recs);
  CHECK(rows[1].flagged == 1);
}

TEST_CASE("records CSV round trip") {
  std::vector<SweepRecord> recs{record(0.1, EstimatorKind::LM, 0, 0.123456789012345678),
                                record(0.1, EstimatorKind::SR, 1, std::nan(""), "error: x")};
  recs[0].wall_ms = 12.5;
  const std::string text = csv_of(recs);
  CHECK(text.substr(0, text.find('\n')) == "axis,axis_value,estimator,trial,seed,rrmse,lambda,iters,wall_ms,flag");
  std::istringstream in(text);
  const auto back = read_records_csv(in);
  REQUIRE(back.size() == 2);
  CHECK(back[0].rrmse == recs[0].rrmse);
  CHECK(back[0].wall_ms == 12.5);
  CHECK(back[0].seed == recs[0].seed);
  CHECK(back[0].estimator == EstimatorKind::LM);
  CHECK(std::isnan(back[1].rrmse));
  CHECK(back[1].flag == "error: x");
  CHECK(csv_of(back) == text);

  std::istringstream bad("a,b\n");
  CHECK_THROWS_AS(read_records_csv(bad), std::invalid_argument);
  std::istringstream short_line(std::string(kRecordsHeader) + "\nsaturation,0,LM\n");
  CHECK_THROWS_AS(read_records_csv(short_line), std::invalid_argument);
}

TEST_CASE("summary CSV") {
  std::ostringstream os;
  write_summary_csv(os, aggregate({record(0.1, EstimatorKind::LM, 0, 0.5)}));
  std::istringstream in(os.str());
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  CHECK(header == kSummaryHeader);
  CHECK(line == "saturation,0.1,LM,1,0,0.5,0.5,0.5,0.5");
}

TEST_CASE("sweep config files") {
  std::istringstream in(
      "# experiment D\n"
      "axis = saturation\n"
      "grid = 0, 5/150, 10/150\n"
      "trials = 3\n"
      "estimators = LM, SC\n"
      "seed = 7\n"
      "n = 128\n"
      "f_sigma = 0.05\n"
      "lm_lambda = discrepancy\n");
  const SweepSpec spec = parse_sweep_config(in);
  CHECK(spec.axis == Axis::saturation);
  REQUIRE(spec.grid.size() == 3);
  CHECK(spec.grid[1] == 5.0 / 150);
  CHECK(spec.trials == 3);
  CHECK(spec.estimators == std::vector<EstimatorKind>{EstimatorKind::LM, EstimatorKind::SC});
  CHECK(spec.seed0 == 7);
  CHECK(spec.fixed.n == 128);
  CHECK(spec.fixed.m == 150);
  CHECK(spec.fixed.f_sigma == 0.05);
  CHECK(spec.lm_rule == LmRule::discrepancy);

  std::ostringstream os;
  write_sweep_config(os, spec);
  std::istringstream again(os.str());
  const SweepSpec back = parse_sweep_config(again);
  CHECK(back.grid == spec.grid);
  CHECK(back.estimators == spec.estimators);
  CHECK(back.fixed.n == spec.fixed.n);
  CHECK(back.fixed.f_sigma == spec.fixed.f_sigma);
  CHECK(back.seed0 == spec.seed0);
  CHECK(back.lm_rule == spec.lm_rule);

  // the default grid of the axis applies when none is given
  std::istringstream noise("axis = noise\n");
  CHECK(parse_sweep_config(noise).grid.size() == 11);

  std::istringstream unknown("axis = noise\ncolour = red\n");
  CHECK_THROWS_WITH_AS(parse_sweep_config(unknown), doctest::Contains("line 2"), std::invalid_argument);
  std::istringstream no_eq("trials 3\n");
  CHECK_THROWS_AS(parse_sweep_config(no_eq), std::invalid_argument);
  std::istringstream bad_count("trials = 2.5\n");
  CHECK_THROWS_AS(parse_sweep_config(bad_count), std::invalid_argument);
  std::istringstream bad_axis("axis = time\n");
  CHECK_THROWS_AS(parse_sweep_config(bad_axis), std::invalid_argument);
}

TEST_CASE("SweepSpec::validate") {
  SweepSpec spec = small_spec();
  CHECK_NOTHROW(spec.validate());
  spec.grid.clear();
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = small_spec();
  spec.trials = 0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = small_spec();
  spec.estimators.clear();
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = small_spec();
  spec.grid = {1.0};
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  CHECK(axis_from_string(to_string(Axis::noise)) == Axis::noise);
  CHECK(lm_rule_from_string(to_string(LmRule::crossval)) == LmRule::crossval);
}

TEST_CASE("shipped experiment configs match the default grids") {
  const std::filesystem::path dir = SATCS_CONFIG_DIR;
  const std::pair<const char*, Axis> files[] = {{"exp_a_measurements.cfg", Axis::measurements},
                                                {"exp_b_sparsity.cfg", Axis::sparsity},
                                                {"exp_c_noise.cfg", Axis::noise},
                                                {"exp_d_saturation.cfg", Axis::saturation}};
  for (const auto& [name, axis] : files) {
    CAPTURE(name);
    std::ifstream in(dir / name);
    REQUIRE(in);
    const SweepSpec spec = parse_sweep_config(in);
    const SweepSpec def = SweepSpec::defaults(axis);
    CHECK(spec.axis == axis);
    REQUIRE(spec.grid.size() == def.grid.size());
    for (std::size_t i = 0; i < def.grid.size(); ++i) CHECK(spec.grid[i] == doctest::Approx(def.grid[i]).epsilon(1e-15));
    CHECK(spec.trials == 10);
    CHECK(spec.estimators.size() == 5);
  }
  std::ifstream in(dir / "fig1_lm_vs_sc.cfg");
  REQUIRE(in);
  const SweepSpec fig = parse_sweep_config(in);
  CHECK(fig.fixed.s == 15);
  CHECK(fig.fixed.m == 150);
  CHECK(fig.grid == std::vector<double>{0.35});
  CHECK(fig.estimators == std::vector<EstimatorKind>{EstimatorKind::LM, EstimatorKind::SC});
}
