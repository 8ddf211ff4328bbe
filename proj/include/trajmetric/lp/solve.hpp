#pragma once

#include <trajmetric/lp/dense_simplex.hpp>
#include <trajmetric/lp/interior_point.hpp>
#include <trajmetric/lp/linear_program.hpp>

namespace trajmetric::lp {

/// Programs whose dense tableau has at most this many cells go to the simplex.
inline constexpr double kDenseCellLimit = 2.5e5;

inline LpBackend pick_backend(const LinearProgram& prog, LpBackend requested) {
    if (requested != LpBackend::automatic) return requested;
    const double rows = static_cast<double>(prog.num_rows());
    const double cells = (rows + 1.0) * (static_cast<double>(prog.num_vars()) + rows + 1.0);
    return cells <= kDenseCellLimit ? LpBackend::simplex : LpBackend::interior_point;
}

inline LpResult solve(const LinearProgram& prog, LpBackend backend = LpBackend::automatic,
                      LpTolerances tol = {}) {
    if (pick_backend(prog, backend) == LpBackend::simplex) return DenseSimplex(tol).solve(prog);
    return InteriorPoint(tol).solve(prog);
}

} // namespace trajmetric::lp
