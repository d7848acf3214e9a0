#include "hip/types.hpp"

#include <cmath>
#include <sstream>

namespace hip {

std::string to_string(Family f) {
  switch (f) {
    case Family::MultiClass: return "multiclass";
    case Family::Poisson: return "poisson";
    case Family::Zip: return "zip";
  }
  return "?";
}

std::string to_string(Standardization s) {
  return s == Standardization::Subgroup ? "subgroup" : "none";
}

Family family_from_string(const std::string& s) {
  if (s == "multiclass" || s == "binary") return Family::MultiClass;
  if (s == "poisson") return Family::Poisson;
  if (s == "zip") return Family::Zip;
  throw DataError("unknown family '" + s + "' (expected multiclass|poisson|zip)");
}

Standardization standardization_from_string(const std::string& s) {
  if (s == "subgroup") return Standardization::Subgroup;
  if (s == "none") return Standardization::None;
  throw DataError("unknown standardization '" + s + "' (expected subgroup|none)");
}

OutcomeData OutcomeData::multiclass(const Eigen::VectorXi& labels, Index num_classes) {
  OutcomeData out;
  out.family = Family::MultiClass;
  out.labels = labels;
  out.indicators = Eigen::MatrixXd::Zero(labels.size(), num_classes);
  for (Index i = 0; i < labels.size(); ++i) {
    const Index c = labels(i);
    if (c >= 0 && c < num_classes) out.indicators(i, c) = 1.0;
    // out-of-range labels leave an all-zero row; validate_dataset reports it
  }
  return out;
}

OutcomeData OutcomeData::count_family(Family family, Eigen::VectorXd counts,
                                      Eigen::VectorXd offsets) {
  OutcomeData out;
  out.family = family;
  out.counts = std::move(counts);
  if (offsets.size() == 0) offsets = Eigen::VectorXd::Ones(out.counts.size());
  out.offsets = std::move(offsets);
  out.log_count_factorial = out.counts.unaryExpr(
      [](double y) { return std::lgamma(y + 1.0); });
  return out;
}

void FitConfig::validate(Index num_views) const {
  if (k < 1) throw DataError("FitConfig: K must be a positive integer");
  if (!(lambda_g > 0.0) || !(lambda_xi > 0.0))
    throw DataError("FitConfig: lambda_g and lambda_xi must be > 0");
  if (!gamma.empty()) {
    if (static_cast<Index>(gamma.size()) != num_views)
      throw DataError("FitConfig: gamma must have one entry per view");
    bool any = false;
    for (int g : gamma) {
      if (g != 0 && g != 1) throw DataError("FitConfig: gamma entries must be 0 or 1");
      any = any || g == 1;
    }
    if (!any) throw DataError("FitConfig: at least one gamma_d must be 1");
  }
  if (!(epsilon_conv > 0.0)) throw DataError("FitConfig: epsilon_conv must be > 0");
  if (iter_max < 1) throw DataError("FitConfig: iter_max must be >= 1");
  for (const SolverSettings* s :
       {&z_solver, &g_solver, &xi_solver, &theta_solver}) {
    if (!(s->step0 > 0.0) || !(s->shrink > 0.0) || s->shrink >= 1.0 ||
        s->max_iter < 1 || !(s->tol > 0.0) || !(s->adagrad_rate > 0.0) ||
        !(s->adagrad_floor > 0.0))
      throw DataError("FitConfig: invalid solver settings");
  }
}

std::string ValidationReport::summary() const {
  if (ok()) return "ok";
  std::ostringstream os;
  os << violations.size() << " violation(s):";
  for (const auto& v : violations) {
    os << "\n  [" << v.kind << "]";
    if (v.view >= 0) os << " view " << v.view;
    if (v.subgroup >= 0) os << " subgroup " << v.subgroup;
    os << ": " << v.message;
  }
  return os.str();
}

}  // namespace hip
