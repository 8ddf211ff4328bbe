#pragma once

#include <trajmetric/core.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace trajmetric::detail {

/// Minimum-cost perfect matching on a square cost matrix (shortest augmenting
/// path Hungarian method with potentials, O(n^3)). Returns row -> column.
inline std::vector<int> hungarian(const Matrix& cost) {
    const int n = static_cast<int>(cost.rows());
    std::vector<int> row_of_col(n + 1, 0);
    if (n == 0) return {};
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> way(n + 1, 0);
    std::vector<char> used(n + 1);

    for (int i = 1; i <= n; ++i) {
        row_of_col[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = row_of_col[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (row_of_col[j0] != 0);
        do {
            const int j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> col_of_row(n, -1);
    for (int j = 1; j <= n; ++j) col_of_row[row_of_col[j] - 1] = j - 1;
    return col_of_row;
}

/// Optimal partial assignment between n_x rows and n_y columns where a pair
/// costs pair(i, j), leaving row i unassigned costs row_miss[i] and leaving
/// column j unassigned costs col_miss[j].
struct PartialAssignment {
    double cost = 0.0;
    /// targets[i] in {0, 1..n_y}; 0 = unassigned, otherwise 1-based column.
    std::vector<int> targets;
};

namespace partial {

struct Problem {
    const Matrix& pair;
    const Eigen::VectorXd& row_miss;
    const Eigen::VectorXd& col_miss;
};

/// Cost of the best completion restricted to the given rows/columns, solved on
/// the (|rows|+|cols|)-square augmented matrix. Dummy columns take unassigned
/// rows, dummy rows take unassigned columns.
inline double solve_restricted(const Problem& pb, const std::vector<int>& rows,
                               const std::vector<int>& cols, std::vector<int>* targets = nullptr) {
    const int nr = static_cast<int>(rows.size());
    const int nc = static_cast<int>(cols.size());
    const int n = nr + nc;
    if (n == 0) return 0.0;
    Matrix aug = Matrix::Zero(n, n);
    for (int a = 0; a < nr; ++a) {
        for (int b = 0; b < nc; ++b) aug(a, b) = pb.pair(rows[a], cols[b]);
        for (int b = nc; b < n; ++b) aug(a, b) = pb.row_miss(rows[a]);
    }
    for (int a = nr; a < n; ++a) {
        for (int b = 0; b < nc; ++b) aug(a, b) = pb.col_miss(cols[b]);
    }
    const auto match = hungarian(aug);
    double total = 0.0;
    std::vector<char> col_used(static_cast<std::size_t>(nc), 0);
    for (int a = 0; a < nr; ++a) {
        const int b = match[a];
        if (b < nc) {
            total += pb.pair(rows[a], cols[b]);
            col_used[b] = 1;
            if (targets) (*targets)[rows[a]] = cols[b] + 1;
        } else {
            total += pb.row_miss(rows[a]);
            if (targets) (*targets)[rows[a]] = 0;
        }
    }
    for (int b = 0; b < nc; ++b) {
        if (!col_used[b]) total += pb.col_miss(cols[b]);
    }
    return total;
}

} // namespace partial

/// Optimal partial assignment; among optimal solutions (up to a relative
/// 1e-12 tie tolerance) returns the lexicographically smallest target vector,
/// with "unassigned" ordered before every column.
inline PartialAssignment solve_partial_assignment(const Matrix& pair, const Eigen::VectorXd& row_miss,
                                                  const Eigen::VectorXd& col_miss) {
    const int nx = static_cast<int>(pair.rows());
    const int ny = static_cast<int>(pair.cols());
    const partial::Problem pb{pair, row_miss, col_miss};

    std::vector<int> rows(nx), cols(ny);
    for (int i = 0; i < nx; ++i) rows[i] = i;
    for (int j = 0; j < ny; ++j) cols[j] = j;

    PartialAssignment out;
    out.targets.assign(static_cast<std::size_t>(nx), 0);
    const double best = partial::solve_restricted(pb, rows, cols);
    const double tol = 1e-12 * std::max(1.0, std::abs(best));

    double fixed = 0.0;
    std::vector<int> free_rows = rows;
    std::vector<int> free_cols = cols;
    for (int i = 0; i < nx; ++i) {
        free_rows.erase(free_rows.begin());
        bool placed = false;
        if (fixed + row_miss(i) + partial::solve_restricted(pb, free_rows, free_cols) <= best + tol) {
            fixed += row_miss(i);
            out.targets[i] = 0;
            placed = true;
        }
        for (std::size_t c = 0; !placed && c < free_cols.size(); ++c) {
            const int j = free_cols[c];
            std::vector<int> rest = free_cols;
            rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(c));
            if (fixed + pair(i, j) + partial::solve_restricted(pb, free_rows, rest) <= best + tol) {
                fixed += pair(i, j);
                out.targets[i] = j + 1;
                free_cols = std::move(rest);
                placed = true;
            }
        }
        if (!placed) {
            // Only reachable through accumulated rounding; fall back to the plain optimum.
            std::vector<int> t(static_cast<std::size_t>(nx), 0);
            out.cost = partial::solve_restricted(pb, rows, cols, &t);
            out.targets = std::move(t);
            return out;
        }
    }
    for (int j : free_cols) fixed += col_miss(j);
    out.cost = fixed;
    return out;
}

} // namespace trajmetric::detail
