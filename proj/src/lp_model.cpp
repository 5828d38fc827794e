#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "lp_internal.hpp"
#include "phasorgraph/error.hpp"

namespace phasorgraph::lp {

void StandardFormLp::validate() const {
  const auto v = objective.size();
  const auto m = rhs.size();
  if (constraints.rows() != m || constraints.cols() != v)
    throw ValidationError("StandardFormLp: constraint matrix has wrong shape");
  if (static_cast<Eigen::Index>(lower.size()) != v || static_cast<Eigen::Index>(upper.size()) != v)
    throw ValidationError("StandardFormLp: bound vectors must have one entry per variable");
  if (!objective.allFinite() || !rhs.allFinite())
    throw ValidationError("StandardFormLp: non-finite objective or rhs");
  for (Eigen::Index r = 0; r < constraints.outerSize(); ++r)
    for (SparseRowMatrix::InnerIterator it(constraints, r); it; ++it) {
      if (it.value() == 0.0) throw ValidationError("StandardFormLp: explicit zero stored in A");
      if (!std::isfinite(it.value())) throw ValidationError("StandardFormLp: non-finite entry in A");
    }
  for (std::size_t j = 0; j < lower.size(); ++j) {
    if (lower[j] && !std::isfinite(*lower[j])) throw ValidationError("StandardFormLp: non-finite bound");
    if (upper[j] && !std::isfinite(*upper[j])) throw ValidationError("StandardFormLp: non-finite bound");
    if (lower[j] && upper[j] && *lower[j] > *upper[j])
      throw ValidationError("StandardFormLp: lower bound exceeds upper bound");
  }
}

double StandardFormLp::max_violation(const Eigen::VectorXd& x) const {
  double worst = 0.0;
  const Eigen::VectorXd Ax = constraints * x;
  for (Eigen::Index i = 0; i < rhs.size(); ++i) worst = std::max(worst, Ax[i] - rhs[i]);
  for (std::size_t j = 0; j < lower.size(); ++j) {
    const double xj = x[static_cast<Eigen::Index>(j)];
    if (lower[j]) worst = std::max(worst, *lower[j] - xj);
    if (upper[j]) worst = std::max(worst, xj - *upper[j]);
  }
  return worst;
}

LpBuilder::LpBuilder(std::size_t num_variables)
    : num_variables_(num_variables),
      objective_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_variables))),
      lower_(num_variables),
      upper_(num_variables) {}

void LpBuilder::set_objective(std::size_t var, double coefficient) {
  objective_[static_cast<Eigen::Index>(var)] = coefficient;
}
void LpBuilder::set_lower(std::size_t var, double bound) { lower_.at(var) = bound; }
void LpBuilder::set_upper(std::size_t var, double bound) { upper_.at(var) = bound; }

std::size_t LpBuilder::add_row(double rhs) {
  rhs_.push_back(rhs);
  return rhs_.size() - 1;
}

void LpBuilder::add_term(std::size_t row, std::size_t var, double coefficient) {
  if (row >= rhs_.size() || var >= num_variables_) throw ValidationError("LpBuilder: index out of range");
  if (coefficient == 0.0) return;
  triplets_.emplace_back(static_cast<int>(row), static_cast<int>(var), coefficient);
}

StandardFormLp LpBuilder::build() const {
  StandardFormLp p;
  p.objective = objective_;
  p.rhs = Eigen::Map<const Eigen::VectorXd>(rhs_.data(), static_cast<Eigen::Index>(rhs_.size()));
  p.constraints.resize(static_cast<Eigen::Index>(rhs_.size()), static_cast<Eigen::Index>(num_variables_));
  p.constraints.setFromTriplets(triplets_.begin(), triplets_.end());
  p.constraints.prune(0.0);  // duplicates may cancel
  p.lower = lower_;
  p.upper = upper_;
  p.validate();
  return p;
}

const char* to_string(LpStatus s) noexcept {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterLimit: return "iter_limit";
  }
  return "unknown";
}

LpStatus status_from_string(const std::string& s) {
  if (s == "optimal") return LpStatus::Optimal;
  if (s == "infeasible") return LpStatus::Infeasible;
  if (s == "unbounded") return LpStatus::Unbounded;
  if (s == "iter_limit") return LpStatus::IterLimit;
  throw ValidationError("unknown LP status '" + s + "'");
}

LpSolution solve_lp(const StandardFormLp& p, const LpSettings& settings) {
  return settings.algorithm == LpAlgorithm::Simplex ? solve_simplex(p, settings)
                                                    : solve_interior_point(p, settings);
}

LpSolution solve_interior_point(const StandardFormLp& p, const LpSettings& settings) {
  return detail::presolve_and_solve(p, settings, detail::interior_point_core);
}

LpSolution solve_simplex(const StandardFormLp& p, const LpSettings& settings) {
  return detail::presolve_and_solve(p, settings, detail::simplex_core);
}

namespace detail {

LpSolution presolve_and_solve(const StandardFormLp& p, const LpSettings& settings,
                              const CoreSolver& core) {
  p.validate();
  const Eigen::Index v = p.objective.size();
  const Eigen::Index m = p.rhs.size();

  Eigen::VectorXd x = Eigen::VectorXd::Zero(v);
  std::vector<bool> removed(static_cast<std::size_t>(v), false);
  bool unbounded_column = false;

  // Fixed variables and variables that appear in no constraint.
  const Eigen::SparseMatrix<double> A_cols = p.constraints;
  for (Eigen::Index j = 0; j < v; ++j) {
    const auto& lo = p.lower[static_cast<std::size_t>(j)];
    const auto& up = p.upper[static_cast<std::size_t>(j)];
    const bool empty = A_cols.col(j).nonZeros() == 0;
    if (lo && up && *lo == *up) {
      x[j] = *lo;
      removed[static_cast<std::size_t>(j)] = true;
    } else if (empty) {
      const double c = p.objective[j];
      if (c > 0.0) {
        if (lo) x[j] = *lo; else unbounded_column = true;
      } else if (c < 0.0) {
        if (up) x[j] = *up; else unbounded_column = true;
      } else {
        x[j] = std::clamp(0.0, lo.value_or(-std::numeric_limits<double>::infinity()),
                          up.value_or(std::numeric_limits<double>::infinity()));
      }
      removed[static_cast<std::size_t>(j)] = true;
    }
  }

  std::vector<Eigen::Index> keep_var;
  for (Eigen::Index j = 0; j < v; ++j)
    if (!removed[static_cast<std::size_t>(j)]) keep_var.push_back(j);
  std::vector<Eigen::Index> new_index(static_cast<std::size_t>(v), -1);
  for (std::size_t k = 0; k < keep_var.size(); ++k) new_index[static_cast<std::size_t>(keep_var[k])] = static_cast<Eigen::Index>(k);

  // Rows: move removed columns to the rhs; drop rows that become empty.
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<double> rhs;
  bool infeasible_row = false;
  for (Eigen::Index i = 0; i < m; ++i) {
    double b = p.rhs[i];
    std::vector<Eigen::Triplet<double>> row;
    for (SparseRowMatrix::InnerIterator it(p.constraints, i); it; ++it) {
      const auto j = static_cast<std::size_t>(it.col());
      if (removed[j]) b -= it.value() * x[it.col()];
      else row.emplace_back(static_cast<int>(rhs.size()), static_cast<int>(new_index[j]), it.value());
    }
    if (row.empty()) {
      if (b < -settings.feas_tol) infeasible_row = true;
      continue;
    }
    trip.insert(trip.end(), row.begin(), row.end());
    rhs.push_back(b);
  }

  LpSolution out;
  if (infeasible_row) {
    out.status = LpStatus::Infeasible;
    out.x = x;
    out.max_violation = p.max_violation(x);
    out.objective_value = p.objective.dot(x);
    return out;
  }

  if (!keep_var.empty() && !rhs.empty()) {
    StandardFormLp reduced;
    const auto vr = static_cast<Eigen::Index>(keep_var.size());
    reduced.objective.resize(vr);
    reduced.lower.resize(keep_var.size());
    reduced.upper.resize(keep_var.size());
    for (std::size_t k = 0; k < keep_var.size(); ++k) {
      const auto j = static_cast<std::size_t>(keep_var[k]);
      reduced.objective[static_cast<Eigen::Index>(k)] = p.objective[keep_var[k]];
      reduced.lower[k] = p.lower[j];
      reduced.upper[k] = p.upper[j];
    }
    reduced.rhs = Eigen::Map<Eigen::VectorXd>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    reduced.constraints.resize(static_cast<Eigen::Index>(rhs.size()), vr);
    reduced.constraints.setFromTriplets(trip.begin(), trip.end());

    LpSettings core_settings = settings;
    if (settings.initial_point && settings.initial_point->size() == v) {
      Eigen::VectorXd hint(vr);
      for (std::size_t k = 0; k < keep_var.size(); ++k) hint[static_cast<Eigen::Index>(k)] = (*settings.initial_point)[keep_var[k]];
      core_settings.initial_point = hint;
    } else {
      core_settings.initial_point.reset();
    }
    LpSolution sub = core(reduced, core_settings);
    for (std::size_t k = 0; k < keep_var.size(); ++k) x[keep_var[k]] = sub.x[static_cast<Eigen::Index>(k)];
    out.status = sub.status;
    out.iterations = sub.iterations;
  } else if (!keep_var.empty()) {
    // Variables remain but no rows: each one is bounded only by its own bounds.
    out.status = LpStatus::Optimal;
    for (auto j : keep_var) {
      const auto& lo = p.lower[static_cast<std::size_t>(j)];
      const auto& up = p.upper[static_cast<std::size_t>(j)];
      const double c = p.objective[j];
      if (c > 0.0) { if (lo) x[j] = *lo; else unbounded_column = true; }
      else if (c < 0.0) { if (up) x[j] = *up; else unbounded_column = true; }
    }
  } else {
    out.status = LpStatus::Optimal;
  }

  if (unbounded_column && out.status == LpStatus::Optimal) out.status = LpStatus::Unbounded;
  out.x = std::move(x);
  out.objective_value = p.objective.dot(out.x);
  out.max_violation = p.max_violation(out.x);
  return out;
}

}  // namespace detail

void write_lp(std::ostream& os, const StandardFormLp& p) {
  const auto old_precision = os.precision(17);
  os << "lp " << p.num_variables() << ' ' << p.num_constraints() << '\n';
  os << "min";
  for (Eigen::Index j = 0; j < p.objective.size(); ++j)
    if (p.objective[j] != 0.0) os << ' ' << j << ':' << p.objective[j];
  os << '\n';
  for (Eigen::Index i = 0; i < p.constraints.outerSize(); ++i) {
    os << "row " << i << ':';
    for (SparseRowMatrix::InnerIterator it(p.constraints, i); it; ++it) os << ' ' << it.col() << ':' << it.value();
    os << " <= " << p.rhs[i] << '\n';
  }
  for (std::size_t j = 0; j < p.lower.size(); ++j) {
    if (!p.lower[j] && !p.upper[j]) continue;
    os << "bound " << j << ' ';
    if (p.lower[j]) os << *p.lower[j]; else os << "-inf";
    os << ' ';
    if (p.upper[j]) os << *p.upper[j]; else os << "inf";
    os << '\n';
  }
  os.precision(old_precision);
}

}  // namespace phasorgraph::lp
