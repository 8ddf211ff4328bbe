#pragma once

#include <trajmetric/core.hpp>
#include <trajmetric/error.hpp>
#include <trajmetric/lp/solve.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

namespace trajmetric {

/// Per-time-step cost matrix D of size (n_X + 1) x (n_Y + 1). The last row and
/// column hold the cost of leaving an estimate / a truth unassigned.
class CostMatrix {
public:
    explicit CostMatrix(Matrix entries) : entries_(std::move(entries)) {
        detail::require(entries_.rows() >= 1 && entries_.cols() >= 1, "CostMatrix: empty matrix");
        detail::require(entries_.allFinite(), "CostMatrix: non-finite entry");
        detail::require(entries_.minCoeff() >= 0.0, "CostMatrix: negative entry");
        detail::require(entries_(entries_.rows() - 1, entries_.cols() - 1) == 0.0,
                        "CostMatrix: corner entry must be zero");
    }

    const Matrix& entries() const noexcept { return entries_; }
    double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }
    int n_x() const noexcept { return static_cast<int>(entries_.rows()) - 1; }
    int n_y() const noexcept { return static_cast<int>(entries_.cols()) - 1; }

private:
    Matrix entries_;
};

/// Soft or binary assignment weights, same shape as the cost matrix.
struct WeightMatrix {
    Matrix entries;

    int n_x() const noexcept { return static_cast<int>(entries.rows()) - 1; }
    int n_y() const noexcept { return static_cast<int>(entries.cols()) - 1; }

    /// Row/column sums, corner and sign constraints within `tol`.
    bool feasible(double tol = 1e-9) const {
        const auto nx = entries.rows() - 1;
        const auto ny = entries.cols() - 1;
        if (entries.minCoeff() < -tol) return false;
        if (std::abs(entries(nx, ny)) > tol) return false;
        for (Eigen::Index i = 0; i < nx; ++i) {
            if (std::abs(entries.row(i).sum() - 1.0) > tol) return false;
        }
        for (Eigen::Index j = 0; j < ny; ++j) {
            if (std::abs(entries.col(j).sum() - 1.0) > tol) return false;
        }
        return true;
    }

    bool binary(double tol = 1e-9) const {
        return (entries.array().abs() <= tol || (entries.array() - 1.0).abs() <= tol).all();
    }
};

/// targets[i] in {0..n_Y}: 0 = unassigned, otherwise the 1-based estimate index.
struct AssignmentVector {
    std::vector<int> targets;

    bool injective() const {
        std::vector<int> seen;
        for (int t : targets) {
            if (t == 0) continue;
            if (std::find(seen.begin(), seen.end(), t) != seen.end()) return false;
            seen.push_back(t);
        }
        return true;
    }

    WeightMatrix to_weights(int n_y) const {
        const auto nx = static_cast<Eigen::Index>(targets.size());
        WeightMatrix w{Matrix::Zero(nx + 1, n_y + 1)};
        std::vector<char> used(static_cast<std::size_t>(n_y), 0);
        for (Eigen::Index i = 0; i < nx; ++i) {
            const int t = targets[static_cast<std::size_t>(i)];
            if (t == 0) {
                w.entries(i, n_y) = 1.0;
            } else {
                w.entries(i, t - 1) = 1.0;
                used[static_cast<std::size_t>(t - 1)] = 1;
            }
        }
        for (int j = 0; j < n_y; ++j) {
            if (!used[static_cast<std::size_t>(j)]) w.entries(nx, j) = 1.0;
        }
        return w;
    }

    friend bool operator==(const AssignmentVector&, const AssignmentVector&) = default;
};

struct SolverSolution {
    /// Minimized objective, not yet raised to 1/p.
    double objective_pth_power = 0.0;
    std::vector<WeightMatrix> weights;
    /// Optimal assignment vectors; filled by the exact solver only.
    std::vector<AssignmentVector> assignments;
};

struct ExactSolverOptions {
    /// Maximum number of DP states per independent sub-problem.
    std::size_t max_states = 2'000'000;
};

struct LpSolverOptions {
    lp::LpBackend backend = lp::LpBackend::automatic;
    lp::LpTolerances tolerances{};
};

/// Objective of the binary or relaxed assignment program at the given weights:
/// sum_k trace(D^k' W^k) + gamma^p / 2 * sum_k |W^k - W^{k+1}| over the
/// non-dummy block.
inline double assignment_objective(const std::vector<CostMatrix>& costs, const std::vector<WeightMatrix>& weights,
                                   double gamma, double p) {
    detail::require(costs.size() == weights.size(), "assignment_objective: length mismatch");
    double total = 0.0;
    for (std::size_t k = 0; k < costs.size(); ++k) {
        total += costs[k].entries().cwiseProduct(weights[k].entries).sum();
    }
    const double half = std::pow(gamma, p) / 2.0;
    for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
        const auto nx = weights[k].entries.rows() - 1;
        const auto ny = weights[k].entries.cols() - 1;
        total += half * (weights[k].entries.topLeftCorner(nx, ny) - weights[k + 1].entries.topLeftCorner(nx, ny))
                            .cwiseAbs()
                            .sum();
    }
    return total;
}

namespace detail {

inline void validate_costs(const std::vector<CostMatrix>& costs, double gamma, double p) {
    require(!costs.empty(), "assignment solver: at least one time step required");
    require(std::isfinite(gamma) && gamma > 0.0, "assignment solver: switching cost must be > 0");
    require(std::isfinite(p) && p >= 1.0, "assignment solver: order p must be >= 1");
    for (const auto& c : costs) {
        require(c.n_x() == costs.front().n_x() && c.n_y() == costs.front().n_y(),
                "assignment solver: cost matrices differ in shape");
    }
}

/// A pair (i, j) is usable when, at some step, assigning it is strictly
/// cheaper than leaving both unassigned. Unusable pairs can be zeroed in any
/// feasible solution without increasing the objective (their cost moves to
/// the dummy row/column and their switching terms vanish), so both solvers
/// drop them.
inline std::vector<std::vector<char>> usable_pairs(const std::vector<CostMatrix>& costs) {
    const int nx = costs.front().n_x();
    const int ny = costs.front().n_y();
    std::vector<std::vector<char>> usable(static_cast<std::size_t>(nx), std::vector<char>(static_cast<std::size_t>(ny), 0));
    for (const auto& d : costs) {
        for (int i = 0; i < nx; ++i) {
            for (int j = 0; j < ny; ++j) {
                if (d(i, j) < d(i, ny) + d(nx, j)) usable[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 1;
            }
        }
    }
    return usable;
}

/// Connected component of the bipartite graph of usable pairs. Components
/// never interact, so each is solved on its own.
struct Component {
    std::vector<int> rows;
    std::vector<int> cols;
};

inline std::vector<Component> components(int nx, int ny, const std::vector<std::vector<char>>& usable) {
    std::vector<int> parent(static_cast<std::size_t>(nx + ny));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int v) {
        while (parent[static_cast<std::size_t>(v)] != v) {
            parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
            v = parent[static_cast<std::size_t>(v)];
        }
        return v;
    };
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            if (usable[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) {
                const int a = find(i), b = find(nx + j);
                if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
            }
        }
    }
    std::vector<int> slot(static_cast<std::size_t>(nx + ny), -1);
    std::vector<Component> out;
    for (int v = 0; v < nx + ny; ++v) {
        const int r = find(v);
        if (slot[static_cast<std::size_t>(r)] < 0) {
            slot[static_cast<std::size_t>(r)] = static_cast<int>(out.size());
            out.emplace_back();
        }
        auto& comp = out[static_cast<std::size_t>(slot[static_cast<std::size_t>(r)])];
        if (v < nx) {
            comp.rows.push_back(v);
        } else {
            comp.cols.push_back(v - nx);
        }
    }
    return out;
}

/// Time-Viterbi over assignment vectors of one component. States are the
/// cells of the product grid of per-row options ({unassigned} plus usable
/// columns, ascending); grid order equals lexicographic order of the vectors.
class ComponentDp {
public:
    ComponentDp(const std::vector<CostMatrix>& costs, const Component& comp,
                const std::vector<std::vector<char>>& usable, double gamma_p, std::size_t max_states)
        : costs_(costs), comp_(comp), full_(gamma_p), half_(gamma_p / 2.0) {
        const int ny = costs.front().n_y();
        options_.resize(comp.rows.size());
        double cells = 1.0;
        for (std::size_t a = 0; a < comp.rows.size(); ++a) {
            options_[a].push_back(0);
            for (int j : comp.cols) {
                if (usable[static_cast<std::size_t>(comp.rows[a])][static_cast<std::size_t>(j)]) options_[a].push_back(j + 1);
            }
            cells *= static_cast<double>(options_[a].size());
        }
        if (cells > static_cast<double>(max_states)) {
            throw CapacityError("exact solver: " + std::to_string(static_cast<long double>(cells)) +
                                " assignment states exceed the cap of " + std::to_string(max_states) +
                                "; use the LP solver instead");
        }
        cells_ = static_cast<std::size_t>(cells);
        strides_.assign(options_.size(), 1);
        for (std::size_t a = options_.size(); a-- > 1;) strides_[a - 1] = strides_[a] * options_[a].size();
        (void)ny;

        valid_.assign(cells_, 1);
        std::vector<char> used(static_cast<std::size_t>(ny) + 1, 0);
        for (std::size_t cell = 0; cell < cells_; ++cell) {
            bool ok = true;
            for (std::size_t a = 0; a < options_.size() && ok; ++a) {
                const int t = target(cell, a);
                if (t == 0) continue;
                if (used[static_cast<std::size_t>(t)]) ok = false;
                used[static_cast<std::size_t>(t)] = 1;
            }
            for (std::size_t a = 0; a < options_.size(); ++a) used[static_cast<std::size_t>(target(cell, a))] = 0;
            valid_[cell] = ok ? 1 : 0;
        }
    }

    /// Returns the optimal value; writes the lexicographically smallest optimal
    /// target sequence into `assign` (indexed by global row).
    double solve(std::vector<AssignmentVector>& assign) const {
        const std::size_t steps = costs_.size();
        constexpr double inf = std::numeric_limits<double>::infinity();
        std::vector<std::vector<double>> to_go(steps);
        for (std::size_t k = steps; k-- > 0;) {
            std::vector<double> v = node_costs(k);
            if (k + 1 < steps) {
                std::vector<double> next = to_go[k + 1];
                transform(next);
                for (std::size_t c = 0; c < cells_; ++c) {
                    if (valid_[c]) v[c] += next[c];
                }
            }
            to_go[k] = std::move(v);
        }

        const double best = *std::min_element(to_go[0].begin(), to_go[0].end());
        const double tol = 1e-12 * std::max(1.0, std::abs(best));
        std::size_t cur = first_within(to_go[0], tol, best);
        write(assign[0], cur);
        for (std::size_t k = 1; k < steps; ++k) {
            std::vector<double> cand(cells_, inf);
            double m = inf;
            for (std::size_t c = 0; c < cells_; ++c) {
                if (!valid_[c]) continue;
                cand[c] = switch_cost(cur, c) + to_go[k][c];
                m = std::min(m, cand[c]);
            }
            cur = first_within(cand, 1e-12 * std::max(1.0, std::abs(m)), m);
            write(assign[k], cur);
        }
        return best;
    }

private:
    const std::vector<CostMatrix>& costs_;
    const Component& comp_;
    double full_;
    double half_;
    std::vector<std::vector<int>> options_;
    std::vector<std::size_t> strides_;
    std::size_t cells_ = 1;
    std::vector<char> valid_;

    int target(std::size_t cell, std::size_t a) const {
        return options_[a][(cell / strides_[a]) % options_[a].size()];
    }

    std::vector<double> node_costs(std::size_t k) const {
        const auto& d = costs_[k];
        const int nx = d.n_x();
        const int ny = d.n_y();
        std::vector<double> out(cells_, std::numeric_limits<double>::infinity());
        std::vector<char> used(static_cast<std::size_t>(ny) + 1, 0);
        for (std::size_t cell = 0; cell < cells_; ++cell) {
            if (!valid_[cell]) continue;
            double s = 0.0;
            for (std::size_t a = 0; a < options_.size(); ++a) {
                const int t = target(cell, a);
                const int i = comp_.rows[a];
                s += t == 0 ? d(i, ny) : d(i, t - 1);
                used[static_cast<std::size_t>(t)] = 1;
            }
            for (int j : comp_.cols) {
                if (!used[static_cast<std::size_t>(j + 1)]) s += d(nx, j);
            }
            for (std::size_t a = 0; a < options_.size(); ++a) used[static_cast<std::size_t>(target(cell, a))] = 0;
            out[cell] = s;
        }
        return out;
    }

    /// In-place min-plus transform with the separable switching cost:
    /// g(v) <- min_u g(u) + sum_a s(u_a, v_a), one coordinate at a time.
    void transform(std::vector<double>& g) const {
        constexpr double inf = std::numeric_limits<double>::infinity();
        std::vector<double> line;
        for (std::size_t a = 0; a < options_.size(); ++a) {
            const std::size_t len = options_[a].size();
            if (len < 2) continue;
            const std::size_t stride = strides_[a];
            const std::size_t block = stride * len;
            line.resize(len);
            for (std::size_t outer = 0; outer < cells_; outer += block) {
                for (std::size_t inner = 0; inner < stride; ++inner) {
                    const std::size_t base = outer + inner;
                    double best1 = inf, best2 = inf;
                    std::size_t arg1 = 0;
                    for (std::size_t t = 0; t < len; ++t) {
                        line[t] = g[base + t * stride];
                        if (t == 0) continue;
                        if (line[t] < best1) {
                            best2 = best1;
                            best1 = line[t];
                            arg1 = t;
                        } else if (line[t] < best2) {
                            best2 = line[t];
                        }
                    }
                    g[base] = std::min(line[0], half_ + best1);
                    for (std::size_t t = 1; t < len; ++t) {
                        const double other = t == arg1 ? best2 : best1;
                        g[base + t * stride] = std::min({line[t], half_ + line[0], full_ + other});
                    }
                }
            }
        }
    }

    double switch_cost(std::size_t from, std::size_t to) const {
        double s = 0.0;
        for (std::size_t a = 0; a < options_.size(); ++a) {
            const int u = target(from, a);
            const int v = target(to, a);
            if (u == v) continue;
            s += (u != 0 && v != 0) ? full_ : half_;
        }
        return s;
    }

    static std::size_t first_within(const std::vector<double>& values, double tol, double best) {
        for (std::size_t c = 0; c < values.size(); ++c) {
            if (values[c] <= best + tol) return c;
        }
        return 0;
    }

    void write(AssignmentVector& v, std::size_t cell) const {
        for (std::size_t a = 0; a < options_.size(); ++a) {
            v.targets[static_cast<std::size_t>(comp_.rows[a])] = target(cell, a);
        }
    }
};

} // namespace detail

/// Exact minimization over sequences of assignment vectors by dynamic
/// programming over time. Ties resolve to the lexicographically smallest
/// vector sequence (unassigned before any estimate).
inline SolverSolution solve_exact_dp(const std::vector<CostMatrix>& costs, double gamma, double p,
                                     const ExactSolverOptions& options = {}) {
    detail::validate_costs(costs, gamma, p);
    const int nx = costs.front().n_x();
    const int ny = costs.front().n_y();
    const auto usable = detail::usable_pairs(costs);
    const auto comps = detail::components(nx, ny, usable);

    SolverSolution sol;
    sol.assignments.assign(costs.size(), AssignmentVector{std::vector<int>(static_cast<std::size_t>(nx), 0)});
    const double gamma_p = std::pow(gamma, p);
    for (const auto& comp : comps) {
        detail::ComponentDp dp(costs, comp, usable, gamma_p, options.max_states);
        sol.objective_pth_power += dp.solve(sol.assignments);
    }
    sol.weights.reserve(costs.size());
    for (const auto& a : sol.assignments) sol.weights.push_back(a.to_weights(ny));
    return sol;
}

namespace detail {

/// Relaxed program for one component. Variables per step: usable pairs, the
/// dummy column of each row, the dummy row of each column; per transition and
/// usable pair a split |W^k - W^{k+1}| = u+ + u-.
inline double solve_component_lp(const std::vector<CostMatrix>& costs, const Component& comp,
                                 const std::vector<std::vector<char>>& usable, double half_gamma_p,
                                 const LpSolverOptions& options, std::vector<WeightMatrix>& weights) {
    const int nx = costs.front().n_x();
    const int ny = costs.front().n_y();
    const std::size_t steps = costs.size();

    std::vector<std::pair<int, int>> pairs;
    for (int i : comp.rows) {
        for (int j : comp.cols) {
            if (usable[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) pairs.emplace_back(i, j);
        }
    }
    if (pairs.empty()) {
        double total = 0.0;
        for (std::size_t k = 0; k < steps; ++k) {
            for (int i : comp.rows) {
                weights[k].entries(i, ny) = 1.0;
                total += costs[k](i, ny);
            }
            for (int j : comp.cols) {
                weights[k].entries(nx, j) = 1.0;
                total += costs[k](nx, j);
            }
        }
        return total;
    }

    lp::LpBuilder b;
    std::vector<std::vector<int>> pair_var(steps), row_var(steps), col_var(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        const auto& d = costs[k];
        for (const auto& [i, j] : pairs) pair_var[k].push_back(b.add_variable(d(i, j)));
        for (int i : comp.rows) row_var[k].push_back(b.add_variable(d(i, ny)));
        for (int j : comp.cols) col_var[k].push_back(b.add_variable(d(nx, j)));

        for (std::size_t a = 0; a < comp.rows.size(); ++a) {
            const int r = b.add_row(1.0);
            b.set(r, row_var[k][a], 1.0);
            for (std::size_t q = 0; q < pairs.size(); ++q) {
                if (pairs[q].first == comp.rows[a]) b.set(r, pair_var[k][q], 1.0);
            }
        }
        for (std::size_t c = 0; c < comp.cols.size(); ++c) {
            const int r = b.add_row(1.0);
            b.set(r, col_var[k][c], 1.0);
            for (std::size_t q = 0; q < pairs.size(); ++q) {
                if (pairs[q].second == comp.cols[c]) b.set(r, pair_var[k][q], 1.0);
            }
        }
    }
    for (std::size_t k = 0; k + 1 < steps; ++k) {
        for (std::size_t q = 0; q < pairs.size(); ++q) {
            const int up = b.add_variable(half_gamma_p);
            const int down = b.add_variable(half_gamma_p);
            const int r = b.add_row(0.0);
            b.set(r, pair_var[k][q], 1.0);
            b.set(r, pair_var[k + 1][q], -1.0);
            b.set(r, up, -1.0);
            b.set(r, down, 1.0);
        }
    }

    const auto prog = b.build();
    const auto res = lp::solve(prog, options.backend, options.tolerances);
    Eigen::VectorXd x = res.x;
    const auto objective = [&](const Eigen::VectorXd& v) {
        double total = 0.0;
        for (std::size_t k = 0; k < steps; ++k) {
            for (const auto& vars : {&pair_var[k], &row_var[k], &col_var[k]}) {
                for (int var : *vars) total += prog.cost(var) * v(var);
            }
            if (k + 1 == steps) continue;
            for (std::size_t q = 0; q < pairs.size(); ++q) {
                total += half_gamma_p * std::abs(v(pair_var[k][q]) - v(pair_var[k + 1][q]));
            }
        }
        return total;
    };

    // Interior-point solutions carry residue of the order of the tolerances.
    // Per step, weights within 1e-6 of 0 or 1 are rounded and the remaining
    // fractional weights receive the minimum-norm correction that restores the
    // row/column sums. The purified point is kept when it is feasible and no
    // worse than the computed one.
    Eigen::VectorXd snapped = x;
    bool exact = true;
    const auto nrows = comp.rows.size();
    const auto ncons = nrows + comp.cols.size();
    for (std::size_t k = 0; k < steps && exact; ++k) {
        // (variable, row constraint or -1, column constraint or -1)
        std::vector<std::tuple<int, int, int>> vars;
        for (std::size_t q = 0; q < pairs.size(); ++q) {
            const auto a = std::find(comp.rows.begin(), comp.rows.end(), pairs[q].first) - comp.rows.begin();
            const auto c = std::find(comp.cols.begin(), comp.cols.end(), pairs[q].second) - comp.cols.begin();
            vars.emplace_back(pair_var[k][q], static_cast<int>(a), static_cast<int>(nrows + c));
        }
        for (std::size_t a = 0; a < nrows; ++a) vars.emplace_back(row_var[k][a], static_cast<int>(a), -1);
        for (std::size_t c = 0; c < comp.cols.size(); ++c) vars.emplace_back(col_var[k][c], -1, static_cast<int>(nrows + c));

        Eigen::VectorXd residual = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(ncons));
        std::vector<std::size_t> fractional;
        for (std::size_t t = 0; t < vars.size(); ++t) {
            const auto [var, r, c] = vars[t];
            double& v = snapped(var);
            if (std::abs(v) < 1e-6) {
                v = 0.0;
            } else if (std::abs(v - 1.0) < 1e-6) {
                v = 1.0;
            } else {
                fractional.push_back(t);
            }
            for (int con : {r, c}) {
                if (con >= 0) residual(con) -= v;
            }
        }
        if (residual.cwiseAbs().maxCoeff() <= 1e-15) continue;
        if (fractional.empty()) {
            exact = false;
            break;
        }
        Matrix a = Matrix::Zero(static_cast<Eigen::Index>(ncons), static_cast<Eigen::Index>(fractional.size()));
        for (std::size_t f = 0; f < fractional.size(); ++f) {
            const auto [var, r, c] = vars[fractional[f]];
            for (int con : {r, c}) {
                if (con >= 0) a(con, static_cast<Eigen::Index>(f)) = 1.0;
            }
        }
        const Eigen::VectorXd delta = a.completeOrthogonalDecomposition().solve(residual);
        for (std::size_t f = 0; f < fractional.size(); ++f) {
            const int var = std::get<0>(vars[fractional[f]]);
            snapped(var) += delta(static_cast<Eigen::Index>(f));
            if (snapped(var) < 0.0) exact = false;
        }
        if ((a * delta - residual).cwiseAbs().maxCoeff() > 1e-12) exact = false;
    }
    const double raw = objective(x);
    if (exact && objective(snapped) <= raw + 1e-9 * std::max(1.0, raw)) x = snapped;

    for (std::size_t k = 0; k < steps; ++k) {
        for (std::size_t q = 0; q < pairs.size(); ++q) {
            weights[k].entries(pairs[q].first, pairs[q].second) = x(pair_var[k][q]);
        }
        for (std::size_t a = 0; a < comp.rows.size(); ++a) weights[k].entries(comp.rows[a], ny) = x(row_var[k][a]);
        for (std::size_t c = 0; c < comp.cols.size(); ++c) weights[k].entries(nx, comp.cols[c]) = x(col_var[k][c]);
    }
    return objective(x);
}

} // namespace detail

/// Linear programming relaxation: weights are only required to be
/// non-negative with unit row/column sums. A lower bound on the exact value.
inline SolverSolution solve_lp(const std::vector<CostMatrix>& costs, double gamma, double p,
                               const LpSolverOptions& options = {}) {
    detail::validate_costs(costs, gamma, p);
    const int nx = costs.front().n_x();
    const int ny = costs.front().n_y();
    const auto usable = detail::usable_pairs(costs);
    const auto comps = detail::components(nx, ny, usable);

    SolverSolution sol;
    sol.weights.assign(costs.size(), WeightMatrix{Matrix::Zero(nx + 1, ny + 1)});
    const double half_gamma_p = std::pow(gamma, p) / 2.0;
    for (const auto& comp : comps) detail::solve_component_lp(costs, comp, usable, half_gamma_p, options, sol.weights);
    sol.objective_pth_power = assignment_objective(costs, sol.weights, gamma, p);
    return sol;
}

} // namespace trajmetric
