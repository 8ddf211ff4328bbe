#include <gtest/gtest.h>

#include "support.hpp"

#include <trajmetric/assignment.hpp>

namespace {

using namespace trajmetric;

/// Random cost matrices with the dummy structure of the metric: pair entries
/// anywhere in [0, row miss + col miss + slack], some of them far apart.
std::vector<CostMatrix> random_costs(tmtest::Generator& gen, int nx, int ny, int steps) {
    std::vector<CostMatrix> out;
    for (int k = 0; k < steps; ++k) {
        Matrix d = Matrix::Zero(nx + 1, ny + 1);
        for (int i = 0; i < nx; ++i) d(i, ny) = gen.coin(0.2) ? 0.0 : gen.uniform(0.0, 50.0);
        for (int j = 0; j < ny; ++j) d(nx, j) = gen.coin(0.2) ? 0.0 : gen.uniform(0.0, 50.0);
        for (int i = 0; i < nx; ++i) {
            for (int j = 0; j < ny; ++j) {
                const double cap = d(i, ny) + d(nx, j);
                d(i, j) = gen.coin(0.3) ? cap : gen.uniform(0.0, cap + 10.0);
            }
        }
        out.emplace_back(d);
    }
    return out;
}

double step_cost(const CostMatrix& d, const std::vector<int>& pi) {
    const int nx = d.n_x(), ny = d.n_y();
    std::vector<char> used(static_cast<std::size_t>(ny), 0);
    double c = 0.0;
    for (int i = 0; i < nx; ++i) {
        const int t = pi[static_cast<std::size_t>(i)];
        if (t == 0) {
            c += d(i, ny);
        } else {
            c += d(i, t - 1);
            used[static_cast<std::size_t>(t - 1)] = 1;
        }
    }
    for (int j = 0; j < ny; ++j) {
        if (!used[static_cast<std::size_t>(j)]) c += d(nx, j);
    }
    return c;
}

/// Minimum of the binary program over every K-tuple of assignment vectors.
double brute_objective(const std::vector<CostMatrix>& costs, double gamma, double p) {
    const MetricParams prm{1.0, p, gamma};
    const auto vecs = tmtest::assignment_vectors(costs.front().n_x(), costs.front().n_y());
    const std::size_t steps = costs.size();
    std::vector<std::size_t> idx(steps, 0);
    double best = std::numeric_limits<double>::infinity();
    for (;;) {
        double c = 0.0;
        for (std::size_t k = 0; k < steps; ++k) {
            c += step_cost(costs[k], vecs[idx[k]]);
            if (k + 1 < steps) c += tmtest::switch_cost(vecs[idx[k]], vecs[idx[k + 1]], prm);
        }
        best = std::min(best, c);
        std::size_t k = steps;
        while (k > 0 && ++idx[k - 1] == vecs.size()) idx[--k] = 0;
        if (k == 0) break;
    }
    return best;
}

/// Two truths, two estimates, zero cost on (0,0),(1,1) at step 1 and on
/// (0,1),(1,0) at step 2; every other pairing is far apart.
std::vector<CostMatrix> swap_instance() {
    Matrix a(3, 3), b(3, 3);
    a << 0, 100, 50, 100, 0, 50, 50, 50, 0;
    b << 100, 0, 50, 0, 100, 50, 50, 50, 0;
    return {CostMatrix(a), CostMatrix(b)};
}

TEST(CostMatrix, Validation) {
    Matrix bad = Matrix::Ones(2, 2);
    EXPECT_THROW(CostMatrix{bad}, DomainError);
    bad(1, 1) = 0.0;
    bad(0, 0) = -1.0;
    EXPECT_THROW(CostMatrix{bad}, DomainError);
}

TEST(AssignmentVector, ToWeights) {
    const AssignmentVector v{{2, 0}};
    const auto w = v.to_weights(2);
    EXPECT_TRUE(w.feasible());
    EXPECT_TRUE(w.binary());
    EXPECT_EQ(w.entries(0, 1), 1.0);
    EXPECT_EQ(w.entries(1, 2), 1.0);
    EXPECT_EQ(w.entries(2, 0), 1.0);
    EXPECT_FALSE((AssignmentVector{{1, 1}}.injective()));
}

TEST(SolveExact, SingleStepIsStepMinimum) {
    tmtest::Generator gen(51);
    for (int t = 0; t < 50; ++t) {
        const auto costs = random_costs(gen, gen.integer(0, 3), gen.integer(0, 3), 1);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& v : tmtest::assignment_vectors(costs[0].n_x(), costs[0].n_y())) {
            best = std::min(best, step_cost(costs[0], v));
        }
        EXPECT_NEAR(solve_exact_dp(costs, 2.0, 2.0).objective_pth_power, best, 1e-12);
    }
}

TEST(SolveExact, EmptyIsZero) {
    const std::vector<CostMatrix> costs(3, CostMatrix(Matrix::Zero(1, 1)));
    EXPECT_EQ(solve_exact_dp(costs, 2.0, 2.0).objective_pth_power, 0.0);
    EXPECT_EQ(solve_lp(costs, 2.0, 2.0).objective_pth_power, 0.0);
}

TEST(SolveExact, SwapCostsTwoFullSwitches) {
    const auto costs = swap_instance();
    EXPECT_NEAR(brute_objective(costs, 2.0, 2.0), 8.0, 1e-12);
    const auto sol = solve_exact_dp(costs, 2.0, 2.0);
    EXPECT_NEAR(sol.objective_pth_power, 8.0, 1e-12);
    ASSERT_EQ(sol.assignments.size(), 2u);
    EXPECT_EQ(sol.assignments[0].targets, (std::vector<int>{1, 2}));
    EXPECT_EQ(sol.assignments[1].targets, (std::vector<int>{2, 1}));
    EXPECT_NEAR(solve_lp(costs, 2.0, 2.0).objective_pth_power, 8.0, 1e-9);
}

TEST(SolveExact, MatchesEnumeration) {
    tmtest::Generator gen(53);
    for (int t = 0; t < 200; ++t) {
        const auto costs = random_costs(gen, gen.integer(0, 3), gen.integer(0, 3), gen.integer(1, 3));
        const double gamma = gen.uniform(0.5, 4.0);
        const double p = gen.coin() ? 2.0 : gen.uniform(1.0, 3.0);
        const double expect = brute_objective(costs, gamma, p);
        const auto sol = solve_exact_dp(costs, gamma, p);
        EXPECT_NEAR(sol.objective_pth_power, expect, 1e-12 * std::max(1.0, expect));
        EXPECT_NEAR(assignment_objective(costs, sol.weights, gamma, p), sol.objective_pth_power, 1e-9);
        for (const auto& a : sol.assignments) EXPECT_TRUE(a.injective());
    }
}

TEST(SolveLp, LowerBoundAndFeasible) {
    tmtest::Generator gen(57);
    for (int t = 0; t < 200; ++t) {
        const int steps = gen.integer(1, 4);
        const auto costs = random_costs(gen, gen.integer(0, 3), gen.integer(0, 3), steps);
        const auto exact = solve_exact_dp(costs, 2.0, 2.0);
        const auto relaxed = solve_lp(costs, 2.0, 2.0);
        EXPECT_LE(relaxed.objective_pth_power, exact.objective_pth_power + 1e-9);
        if (steps == 1) {
            EXPECT_NEAR(relaxed.objective_pth_power, exact.objective_pth_power, 1e-9);
        }
        for (const auto& w : relaxed.weights) EXPECT_TRUE(w.feasible(1e-9));
    }
}

TEST(SolveLp, BackendsAgree) {
    tmtest::Generator gen(59);
    for (int t = 0; t < 40; ++t) {
        const auto costs = random_costs(gen, gen.integer(1, 4), gen.integer(1, 4), gen.integer(2, 5));
        LpSolverOptions simplex{lp::LpBackend::simplex, {}};
        LpSolverOptions ipm{lp::LpBackend::interior_point, {}};
        const double a = solve_lp(costs, 2.0, 2.0, simplex).objective_pth_power;
        const double b = solve_lp(costs, 2.0, 2.0, ipm).objective_pth_power;
        EXPECT_NEAR(a, b, 1e-7 * std::max(1.0, a));
    }
}

TEST(SolveLp, MonotoneInGammaAndCosts) {
    tmtest::Generator gen(61);
    for (int t = 0; t < 60; ++t) {
        const auto costs = random_costs(gen, gen.integer(1, 3), gen.integer(1, 3), gen.integer(2, 4));
        const double g = gen.uniform(0.5, 3.0);
        const double base = solve_lp(costs, g, 2.0).objective_pth_power;
        EXPECT_LE(base, solve_lp(costs, g + gen.uniform(0.1, 2.0), 2.0).objective_pth_power + 1e-9);

        auto bumped = costs;
        const auto k = static_cast<std::size_t>(gen.integer(0, static_cast<int>(costs.size()) - 1));
        Matrix e = bumped[k].entries();
        const int r = gen.integer(0, static_cast<int>(e.rows()) - 1);
        const int c = gen.integer(0, static_cast<int>(e.cols()) - 1);
        if (r == e.rows() - 1 && c == e.cols() - 1) continue;
        e(r, c) += gen.uniform(0.1, 20.0);
        bumped[k] = CostMatrix(e);
        EXPECT_LE(base, solve_lp(bumped, g, 2.0).objective_pth_power + 1e-9);
    }
}

TEST(SolveExact, CapacityError) {
    Matrix d = Matrix::Zero(9, 9);
    d.topRightCorner(8, 1).setConstant(50.0);
    d.bottomLeftCorner(1, 8).setConstant(50.0);
    const std::vector<CostMatrix> costs(2, CostMatrix(d));
    EXPECT_THROW(solve_exact_dp(costs, 2.0, 2.0, ExactSolverOptions{1000}), CapacityError);
    EXPECT_NEAR(solve_lp(costs, 2.0, 2.0).objective_pth_power, 0.0, 1e-9);
}

TEST(SolveExact, LexicographicTieBreak) {
    Matrix d(2, 3);
    d << 1, 1, 50, 50, 50, 0;
    const auto sol = solve_exact_dp({CostMatrix(d)}, 2.0, 2.0);
    EXPECT_EQ(sol.assignments[0].targets, (std::vector<int>{1}));
}

TEST(Solvers, RejectBadInputs) {
    EXPECT_THROW(solve_exact_dp({}, 2.0, 2.0), DomainError);
    const std::vector<CostMatrix> mixed{CostMatrix(Matrix::Zero(2, 2)), CostMatrix(Matrix::Zero(3, 2))};
    EXPECT_THROW(solve_lp(mixed, 2.0, 2.0), DomainError);
    EXPECT_THROW(solve_lp({CostMatrix(Matrix::Zero(1, 1))}, 0.0, 2.0), DomainError);
}

} // namespace
