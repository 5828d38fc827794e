#pragma once

#include <functional>

#include "phasorgraph/lp.hpp"

namespace phasorgraph::lp::detail {

/// Solver applied to a presolved problem: no fixed variables, no empty rows
/// or columns. Returns a solution in the reduced variable space.
using CoreSolver = std::function<LpSolution(const StandardFormLp&, const LpSettings&)>;

/// Removes fixed variables, empty columns and empty rows, runs `core` on what
/// is left and maps the answer back to the original variables.
LpSolution presolve_and_solve(const StandardFormLp& p, const LpSettings& settings,
                              const CoreSolver& core);

LpSolution interior_point_core(const StandardFormLp& p, const LpSettings& settings);
LpSolution simplex_core(const StandardFormLp& p, const LpSettings& settings);

}  // namespace phasorgraph::lp::detail
