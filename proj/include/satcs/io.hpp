#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "satcs/estimators.hpp"
#include "satcs/signal_model.hpp"
#include "satcs/theory.hpp"

namespace satcs {

using Json = nlohmann::json;

/// Shortest text that reads back to the same double; "nan" / "inf" / "-inf"
/// for non-finite values.
std::string format_double(double v);
double parse_double(const std::string& s);

/// Instance schema:
///   {"format": "satcs-instance", "version": 1, "seed", "n", "m", "basis",
///    "config": {"s", "f_sat", "f_sigma"},
///    "truth": {"coeffs": [n], "support": [s]},   (optional on input)
///    "A": [[n] x m], "y": [m], "tau", "sigma",
///    "s_plus", "s_minus", "s_ns"}                 (optional on input)
/// The partition is recomputed from y on input and must match when given.
Json instance_to_json(const Instance& inst, const InstanceConfig* cfg = nullptr);

struct LoadedInstance {
  MatrixXd A;
  MeasurementSet meas;
  std::optional<SparseSignal> truth;
  Seed seed = 0;
};
LoadedInstance instance_from_json(const Json& j);

Json to_json(const SolveTrace& t, bool with_objective = false);
Json to_json(const CvOutcome& cv);
Json to_json(const RecoveryResult& r, bool with_objective = false);
Json to_json(const BoundInputs& b);
BoundInputs bound_inputs_from_json(const Json& j);
Json to_json(const ErrorBound& e);
Json to_json(const RscReport& r, bool with_audit = true);
Json to_json(const GradNormProbe& p);
Json to_json(const BoundComparison& c);

inline constexpr const char* kBoundCompareHeader = "seed,f_sat,rrmse_sq,bound,gamma_hat,c1";

/// rrmse_sq is ||x_hat - x*||^2 / ||x*||^2 and bound is the error bound on the
/// same relative scale (divided by ||x*||^2).
void write_bound_compare_csv(std::ostream& os, const std::vector<BoundComparison>& rows);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

}  // namespace satcs
