// Dense two-phase tableau simplex with Bland's anti-cycling rule.
//
// Variables are first shifted/split so every column is non-negative:
//   finite lower bound l:  x = l + y            (upper bound u becomes a row y <= u - l)
//   only upper bound u:    x = u - y
//   free:                  x = y+ - y-

#include <cmath>
#include <limits>

#include "lp_internal.hpp"

namespace phasorgraph::lp::detail {

namespace {

constexpr double kPivotTol = 1e-9;

struct ColumnMap {
  enum Kind { Shifted, Mirrored, Split } kind;
  double offset;
  Eigen::Index first;  // column index in y
};

class Tableau {
 public:
  Tableau(Eigen::MatrixXd T, std::vector<Eigen::Index> basis) : T_(std::move(T)), basis_(std::move(basis)) {}

  Eigen::Index rows() const { return T_.rows() - 1; }
  Eigen::Index rhs_col() const { return T_.cols() - 1; }
  Eigen::MatrixXd& data() { return T_; }
  const std::vector<Eigen::Index>& basis() const { return basis_; }

  void pivot(Eigen::Index r, Eigen::Index col) {
    T_.row(r) /= T_(r, col);
    for (Eigen::Index i = 0; i < T_.rows(); ++i)
      if (i != r && T_(i, col) != 0.0) T_.row(i) -= T_(i, col) * T_.row(r);
    basis_[static_cast<std::size_t>(r)] = col;
  }

  // Objective row is the last row, holding reduced costs. Returns false on
  // unboundedness; `iterations` is incremented per pivot.
  enum class Outcome { Optimal, Unbounded, IterLimit };
  Outcome run(Eigen::Index allowed_cols, int& iterations, int max_iterations) {
    const Eigen::Index obj = T_.rows() - 1;
    while (true) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < allowed_cols; ++j)
        if (T_(obj, j) < -kPivotTol) { enter = j; break; }
      if (enter < 0) return Outcome::Optimal;
      if (iterations >= max_iterations) return Outcome::IterLimit;
      Eigen::Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < rows(); ++i) {
        const double a = T_(i, enter);
        if (a <= kPivotTol) continue;
        const double ratio = T_(i, rhs_col()) / a;
        if (ratio < best - 1e-12 ||
            (std::abs(ratio - best) <= 1e-12 && leave >= 0 && basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
          best = ratio;
          leave = i;
        }
      }
      if (leave < 0) return Outcome::Unbounded;
      pivot(leave, enter);
      ++iterations;
    }
  }

  void remove_row(Eigen::Index r) {
    const Eigen::Index n = T_.rows();
    T_.block(r, 0, n - r - 1, T_.cols()) = T_.block(r + 1, 0, n - r - 1, T_.cols()).eval();
    T_.conservativeResize(n - 1, Eigen::NoChange);
    basis_.erase(basis_.begin() + r);
  }

 private:
  Eigen::MatrixXd T_;
  std::vector<Eigen::Index> basis_;
};

}  // namespace

LpSolution simplex_core(const StandardFormLp& p, const LpSettings& settings) {
  const auto v = static_cast<Eigen::Index>(p.num_variables());

  std::vector<ColumnMap> map;
  Eigen::Index ny = 0;
  std::vector<std::pair<Eigen::Index, double>> extra_upper;  // y_k <= value
  for (Eigen::Index j = 0; j < v; ++j) {
    const auto& lo = p.lower[static_cast<std::size_t>(j)];
    const auto& up = p.upper[static_cast<std::size_t>(j)];
    if (lo) {
      map.push_back({ColumnMap::Shifted, *lo, ny});
      if (up) extra_upper.emplace_back(ny, *up - *lo);
      ny += 1;
    } else if (up) {
      map.push_back({ColumnMap::Mirrored, *up, ny});
      ny += 1;
    } else {
      map.push_back({ColumnMap::Split, 0.0, ny});
      ny += 2;
    }
  }

  const Eigen::Index m0 = static_cast<Eigen::Index>(p.num_constraints());
  const Eigen::Index m = m0 + static_cast<Eigen::Index>(extra_upper.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, ny);
  Eigen::VectorXd b(m);
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(ny);

  for (Eigen::Index j = 0; j < v; ++j) {
    const auto& cm = map[static_cast<std::size_t>(j)];
    const double cj = p.objective[j];
    switch (cm.kind) {
      case ColumnMap::Shifted: cost[cm.first] = cj; break;
      case ColumnMap::Mirrored: cost[cm.first] = -cj; break;
      case ColumnMap::Split: cost[cm.first] = cj; cost[cm.first + 1] = -cj; break;
    }
  }
  for (Eigen::Index i = 0; i < m0; ++i) {
    b[i] = p.rhs[i];
    for (SparseRowMatrix::InnerIterator it(p.constraints, i); it; ++it) {
      const auto& cm = map[static_cast<std::size_t>(it.col())];
      const double a = it.value();
      switch (cm.kind) {
        case ColumnMap::Shifted: A(i, cm.first) += a; b[i] -= a * cm.offset; break;
        case ColumnMap::Mirrored: A(i, cm.first) -= a; b[i] -= a * cm.offset; break;
        case ColumnMap::Split: A(i, cm.first) += a; A(i, cm.first + 1) -= a; break;
      }
    }
  }
  for (std::size_t k = 0; k < extra_upper.size(); ++k) {
    const Eigen::Index i = m0 + static_cast<Eigen::Index>(k);
    A(i, extra_upper[k].first) = 1.0;
    b[i] = extra_upper[k].second;
  }

  // Columns: y (ny) | slacks (m) | artificials (one per negative-rhs row) | rhs.
  std::vector<Eigen::Index> negative_rows;
  for (Eigen::Index i = 0; i < m; ++i)
    if (b[i] < 0.0) negative_rows.push_back(i);
  const Eigen::Index na = static_cast<Eigen::Index>(negative_rows.size());
  const Eigen::Index ncols = ny + m + na;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m + 1, ncols + 1);
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  Eigen::Index art = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double sign = b[i] < 0.0 ? -1.0 : 1.0;
    T.block(i, 0, 1, ny) = sign * A.row(i);
    T(i, ny + i) = sign;
    T(i, ncols) = sign * b[i];
    if (sign < 0.0) {
      T(i, ny + m + art) = 1.0;
      basis[static_cast<std::size_t>(i)] = ny + m + art;
      ++art;
    } else {
      basis[static_cast<std::size_t>(i)] = ny + i;
    }
  }

  const int max_iterations = std::max(settings.max_iterations, static_cast<int>(20 * (m + ncols)));
  LpSolution out;
  out.x = Eigen::VectorXd::Zero(v);
  int iterations = 0;

  Tableau tab(std::move(T), std::move(basis));
  if (na > 0) {
    // Phase 1: minimize the sum of artificials.
    auto& D = tab.data();
    D.row(m).setZero();
    D.block(m, ny + m, 1, na).setOnes();
    for (Eigen::Index i = 0; i < m; ++i)
      if (tab.basis()[static_cast<std::size_t>(i)] >= ny + m) D.row(m) -= D.row(i);
    const auto outcome = tab.run(ncols, iterations, max_iterations);
    if (outcome == Tableau::Outcome::IterLimit) {
      out.status = LpStatus::IterLimit;
      out.iterations = iterations;
      return out;
    }
    if (-tab.data()(tab.rows(), ncols) > settings.feas_tol * std::max(1.0, b.lpNorm<Eigen::Infinity>())) {
      out.status = LpStatus::Infeasible;
      out.iterations = iterations;
      return out;
    }
    // Drive remaining artificials out of the basis; drop redundant rows.
    for (Eigen::Index i = tab.rows() - 1; i >= 0; --i) {
      if (tab.basis()[static_cast<std::size_t>(i)] < ny + m) continue;
      Eigen::Index col = -1;
      for (Eigen::Index j = 0; j < ny + m; ++j)
        if (std::abs(tab.data()(i, j)) > kPivotTol) { col = j; break; }
      if (col >= 0) tab.pivot(i, col);
      else tab.remove_row(i);
    }
  }

  // Phase 2 on the original cost, artificial columns excluded.
  {
    auto& D = tab.data();
    const Eigen::Index obj = tab.rows();
    D.row(obj).setZero();
    D.block(obj, 0, 1, ny) = cost.transpose();
    for (Eigen::Index i = 0; i < tab.rows(); ++i) {
      const Eigen::Index bj = tab.basis()[static_cast<std::size_t>(i)];
      if (bj < ny && cost[bj] != 0.0) D.row(obj) -= cost[bj] * D.row(i);
    }
  }
  const auto outcome = tab.run(ny + m, iterations, max_iterations);
  out.iterations = iterations;
  if (outcome == Tableau::Outcome::IterLimit) { out.status = LpStatus::IterLimit; return out; }
  if (outcome == Tableau::Outcome::Unbounded) { out.status = LpStatus::Unbounded; return out; }

  Eigen::VectorXd y = Eigen::VectorXd::Zero(ny);
  for (Eigen::Index i = 0; i < tab.rows(); ++i) {
    const Eigen::Index bj = tab.basis()[static_cast<std::size_t>(i)];
    if (bj < ny) y[bj] = tab.data()(i, tab.rhs_col());
  }
  for (Eigen::Index j = 0; j < v; ++j) {
    const auto& cm = map[static_cast<std::size_t>(j)];
    switch (cm.kind) {
      case ColumnMap::Shifted: out.x[j] = cm.offset + y[cm.first]; break;
      case ColumnMap::Mirrored: out.x[j] = cm.offset - y[cm.first]; break;
      case ColumnMap::Split: out.x[j] = y[cm.first] - y[cm.first + 1]; break;
    }
  }
  out.status = LpStatus::Optimal;
  return out;
}

}  // namespace phasorgraph::lp::detail
