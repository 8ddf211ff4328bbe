#pragma once

#include <trajmetric/error.hpp>
#include <trajmetric/lp/linear_program.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace trajmetric::lp {

/// Two-phase tableau simplex. Dantzig pricing, switching to Bland's rule after
/// a run of degenerate pivots. The final basic solution is re-solved from the
/// original data, so returned vertices carry no accumulated tableau error.
class DenseSimplex {
public:
    explicit DenseSimplex(LpTolerances tol = {}) : tol_(tol) {}

    LpResult solve(const LinearProgram& prog) const {
        const Eigen::Index m = prog.num_rows();
        const Eigen::Index n = prog.num_vars();
        const Eigen::MatrixXd a_dense = Eigen::MatrixXd(prog.constraints);

        // Tableau columns: n structural, m artificial, rhs.
        const Eigen::Index width = n + m + 1;
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m + 1, width);
        for (Eigen::Index r = 0; r < m; ++r) {
            const double sign = prog.rhs(r) < 0.0 ? -1.0 : 1.0;
            t.row(r).head(n) = sign * a_dense.row(r);
            t(r, n + r) = 1.0;
            t(r, width - 1) = sign * prog.rhs(r);
        }
        std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
        for (Eigen::Index r = 0; r < m; ++r) basis[static_cast<std::size_t>(r)] = n + r;

        int iterations = 0;

        // Phase I: minimize the sum of artificials.
        t.row(m).setZero();
        for (Eigen::Index r = 0; r < m; ++r) t.row(m).head(n) -= t.row(r).head(n);
        for (Eigen::Index r = 0; r < m; ++r) t(m, width - 1) -= t(r, width - 1);
        run(t, basis, n + m, iterations);
        const double infeas = -t(m, width - 1);
        if (infeas > tol_.feasibility * (1.0 + prog.rhs.cwiseAbs().maxCoeff())) {
            throw SolverError("simplex: LP infeasible (phase I residual " + std::to_string(infeas) + ")");
        }

        // Drive artificials out of the basis; rows that cannot be pivoted are redundant.
        std::vector<char> redundant(static_cast<std::size_t>(m), 0);
        for (Eigen::Index r = 0; r < m; ++r) {
            if (basis[static_cast<std::size_t>(r)] < n) continue;
            Eigen::Index col = -1;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (std::abs(t(r, j)) > kPivotTol) {
                    col = j;
                    break;
                }
            }
            if (col < 0) {
                redundant[static_cast<std::size_t>(r)] = 1;
            } else {
                pivot(t, basis, r, col);
            }
        }

        // Phase II objective row in reduced form.
        t.row(m).setZero();
        t.row(m).head(n) = prog.cost.transpose();
        for (Eigen::Index r = 0; r < m; ++r) {
            const auto b = basis[static_cast<std::size_t>(r)];
            if (redundant[static_cast<std::size_t>(r)] || b >= n) continue;
            const double cb = t(m, b);
            if (cb != 0.0) t.row(m) -= cb * t.row(r);
        }
        for (Eigen::Index r = 0; r < m; ++r) {
            if (redundant[static_cast<std::size_t>(r)]) t.row(r).setZero();
        }
        run(t, basis, n, iterations);

        LpResult res;
        res.iterations = iterations;
        res.x = Eigen::VectorXd::Zero(n);
        for (Eigen::Index r = 0; r < m; ++r) {
            const auto b = basis[static_cast<std::size_t>(r)];
            if (!redundant[static_cast<std::size_t>(r)] && b < n) res.x(b) = t(r, width - 1);
        }
        polish(prog, a_dense, basis, redundant, res.x);
        res.objective = prog.cost.dot(res.x);
        return res;
    }

private:
    static constexpr double kPivotTol = 1e-9;
    LpTolerances tol_;

    static void pivot(Eigen::MatrixXd& t, std::vector<Eigen::Index>& basis, Eigen::Index r, Eigen::Index c) {
        t.row(r) /= t(r, c);
        for (Eigen::Index i = 0; i < t.rows(); ++i) {
            if (i == r) continue;
            const double f = t(i, c);
            if (f != 0.0) t.row(i) -= f * t.row(r);
        }
        basis[static_cast<std::size_t>(r)] = c;
    }

    /// Iterates until no column below `limit` has a negative reduced cost.
    void run(Eigen::MatrixXd& t, std::vector<Eigen::Index>& basis, Eigen::Index limit, int& iterations) const {
        const Eigen::Index m = t.rows() - 1;
        const Eigen::Index rhs = t.cols() - 1;
        int degenerate_streak = 0;
        const int max_iter = 50 * static_cast<int>(t.cols() + t.rows()) + 1000;
        for (int it = 0; it < max_iter; ++it) {
            const bool bland = degenerate_streak > 50;
            Eigen::Index enter = -1;
            double most = -tol_.optimality;
            for (Eigen::Index j = 0; j < limit; ++j) {
                const double rc = t(m, j);
                if (rc < most) {
                    enter = j;
                    if (bland) break;
                    most = rc;
                }
            }
            if (enter < 0) return;

            Eigen::Index leave = -1;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (Eigen::Index r = 0; r < m; ++r) {
                const double a = t(r, enter);
                if (a <= kPivotTol) continue;
                const double ratio = std::max(t(r, rhs), 0.0) / a;
                if (ratio < best_ratio - 1e-12 ||
                    (ratio <= best_ratio + 1e-12 && leave >= 0 &&
                     basis[static_cast<std::size_t>(r)] < basis[static_cast<std::size_t>(leave)])) {
                    best_ratio = std::min(best_ratio, ratio);
                    leave = r;
                }
            }
            if (leave < 0) throw SolverError("simplex: LP unbounded");
            degenerate_streak = best_ratio <= 1e-12 ? degenerate_streak + 1 : 0;
            pivot(t, basis, leave, enter);
            ++iterations;
        }
        throw SolverError("simplex: iteration limit reached");
    }

    /// Recomputes the basic variables from B x_B = b using the original matrix.
    void polish(const LinearProgram& prog, const Eigen::MatrixXd& a, const std::vector<Eigen::Index>& basis,
                const std::vector<char>& redundant, Eigen::VectorXd& x) const {
        const Eigen::Index n = prog.num_vars();
        std::vector<Eigen::Index> rows, cols;
        for (std::size_t r = 0; r < basis.size(); ++r) {
            if (redundant[r] || basis[r] >= n) continue;
            rows.push_back(static_cast<Eigen::Index>(r));
            cols.push_back(basis[r]);
        }
        if (cols.empty()) return;
        Eigen::MatrixXd bmat(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
        Eigen::VectorXd rhs(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            rhs(static_cast<Eigen::Index>(i)) = prog.rhs(rows[i]);
            for (std::size_t j = 0; j < cols.size(); ++j) {
                bmat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a(rows[i], cols[j]);
            }
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(bmat);
        Eigen::VectorXd xb = lu.solve(rhs);
        if (!xb.allFinite() || (bmat * xb - rhs).cwiseAbs().maxCoeff() > tol_.feasibility) return;
        if (xb.minCoeff() < -tol_.feasibility) return;
        Eigen::VectorXd polished = Eigen::VectorXd::Zero(n);
        for (std::size_t j = 0; j < cols.size(); ++j) {
            polished(cols[j]) = std::max(xb(static_cast<Eigen::Index>(j)), 0.0);
        }
        if ((a * polished - prog.rhs).cwiseAbs().maxCoeff() > tol_.feasibility) return;
        x = polished;
    }
};

} // namespace trajmetric::lp
