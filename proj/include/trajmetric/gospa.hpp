#pragma once

#include <trajmetric/base_metric.hpp>
#include <trajmetric/core.hpp>
#include <trajmetric/hungarian.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

namespace trajmetric {

using StateSet = std::vector<StateVector>;
using IndexPairs = std::vector<std::pair<std::size_t, std::size_t>>;

/// Multi-Bernoulli parameterization: independent Bernoulli components, r > 0.
class MultiBernoulli {
public:
    MultiBernoulli() = default;
    explicit MultiBernoulli(std::vector<BernoulliDensity> components)
        : components_(std::move(components)) {
        for (const auto& b : components_) {
            detail::require(b.existence() > 0.0, "MultiBernoulli: zero existence probability");
            detail::require(b.dimension() == components_.front().dimension(),
                            "MultiBernoulli: inconsistent state dimension");
        }
    }

    const std::vector<BernoulliDensity>& components() const noexcept { return components_; }
    std::size_t size() const noexcept { return components_.size(); }

private:
    std::vector<BernoulliDensity> components_;
};

/// GOSPA (alpha = 2). Components are p-th powers; total is the 1/p root.
struct GospaReport {
    double total = 0.0;
    double localization = 0.0;
    double missed = 0.0;
    double false_det = 0.0;
    IndexPairs assignment;
};

/// PGOSPA (alpha = 2). Components are p-th powers; total is the 1/p root.
struct PgospaReport {
    double total = 0.0;
    double expected_localization = 0.0;
    double existence_mismatch = 0.0;
    double expected_missed = 0.0;
    double expected_false = 0.0;
    IndexPairs assignment;
};

/// p-th power of the PGOSPA distance between two single Bernoulli densities,
/// together with its localization / existence-mismatch split.
struct BernoulliPairCost {
    double localization = 0.0;
    double existence_mismatch = 0.0;
    double base_distance = 0.0;
    double pth_power() const { return localization + existence_mismatch; }
};

inline BernoulliPairCost bernoulli_pair_cost(const BernoulliDensity& bx, const BernoulliDensity& by,
                                             const MetricParams& params, BaseMetricKind kind) {
    BernoulliPairCost out;
    out.base_distance = base_distance(kind, bx.density(), by.density());
    const double clipped = std::min(out.base_distance, params.cutoff);
    out.localization = std::min(bx.existence(), by.existence()) * std::pow(clipped, params.order);
    out.existence_mismatch = std::abs(bx.existence() - by.existence()) * params.cutoff_pow() / 2.0;
    return out;
}

/// PGOSPA between two single Bernoulli densities (both present).
inline double pgospa_bernoulli(const BernoulliDensity& bx, const BernoulliDensity& by,
                               const MetricParams& params, BaseMetricKind kind) {
    params.validate();
    return std::pow(bernoulli_pair_cost(bx, by, params, kind).pth_power(), 1.0 / params.order);
}

inline GospaReport gospa(const StateSet& x, const StateSet& y, const MetricParams& params,
                         BaseMetricKind kind = BaseMetricKind::wasserstein2) {
    params.validate();
    const auto nx = static_cast<Eigen::Index>(x.size());
    const auto ny = static_cast<Eigen::Index>(y.size());
    for (const auto& s : x) detail::require(s.size() == x.front().size(), "gospa: dimension mismatch in x");
    for (const auto& s : y) detail::require(s.size() == y.front().size(), "gospa: dimension mismatch in y");
    if (nx > 0 && ny > 0) {
        detail::require(x.front().size() == y.front().size(), "gospa: dimension mismatch between x and y");
    }

    const double half = params.cutoff_pow() / 2.0;
    Matrix pair(nx, ny);
    for (Eigen::Index i = 0; i < nx; ++i) {
        for (Eigen::Index j = 0; j < ny; ++j) {
            const double d = base_distance(kind, x[i], y[j]);
            pair(i, j) = std::pow(std::min(d, params.cutoff), params.order);
        }
    }
    const Eigen::VectorXd row_miss = Eigen::VectorXd::Constant(nx, half);
    const Eigen::VectorXd col_miss = Eigen::VectorXd::Constant(ny, half);
    const auto sol = detail::solve_partial_assignment(pair, row_miss, col_miss);

    GospaReport rep;
    std::size_t matched = 0;
    for (Eigen::Index i = 0; i < nx; ++i) {
        const int t = sol.targets[static_cast<std::size_t>(i)];
        if (t == 0) continue;
        rep.localization += pair(i, t - 1);
        rep.assignment.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(t - 1));
        ++matched;
    }
    rep.missed = half * static_cast<double>(x.size() - matched);
    rep.false_det = half * static_cast<double>(y.size() - matched);
    rep.total = std::pow(rep.localization + rep.missed + rep.false_det, 1.0 / params.order);
    return rep;
}

inline PgospaReport pgospa(const MultiBernoulli& fx, const MultiBernoulli& fy, const MetricParams& params,
                           BaseMetricKind kind = BaseMetricKind::wasserstein2) {
    params.validate();
    const auto& xs = fx.components();
    const auto& ys = fy.components();
    const auto nx = static_cast<Eigen::Index>(xs.size());
    const auto ny = static_cast<Eigen::Index>(ys.size());
    const double half = params.cutoff_pow() / 2.0;

    std::vector<BernoulliPairCost> costs(static_cast<std::size_t>(nx * ny));
    Matrix pair(nx, ny);
    for (Eigen::Index i = 0; i < nx; ++i) {
        for (Eigen::Index j = 0; j < ny; ++j) {
            auto& c = costs[static_cast<std::size_t>(i * ny + j)];
            c = bernoulli_pair_cost(xs[i], ys[j], params, kind);
            pair(i, j) = c.pth_power();
        }
    }
    Eigen::VectorXd row_miss(nx), col_miss(ny);
    for (Eigen::Index i = 0; i < nx; ++i) row_miss(i) = xs[i].existence() * half;
    for (Eigen::Index j = 0; j < ny; ++j) col_miss(j) = ys[j].existence() * half;
    const auto sol = detail::solve_partial_assignment(pair, row_miss, col_miss);

    PgospaReport rep;
    std::vector<char> col_used(ys.size(), 0);
    for (Eigen::Index i = 0; i < nx; ++i) {
        const int t = sol.targets[static_cast<std::size_t>(i)];
        if (t == 0) {
            rep.expected_missed += row_miss(i);
            continue;
        }
        const auto& c = costs[static_cast<std::size_t>(i * ny + (t - 1))];
        rep.expected_localization += c.localization;
        rep.existence_mismatch += c.existence_mismatch;
        col_used[static_cast<std::size_t>(t - 1)] = 1;
        rep.assignment.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(t - 1));
    }
    for (Eigen::Index j = 0; j < ny; ++j) {
        if (!col_used[static_cast<std::size_t>(j)]) rep.expected_false += col_miss(j);
    }
    rep.total = std::pow(rep.expected_localization + rep.existence_mismatch + rep.expected_missed +
                             rep.expected_false,
                         1.0 / params.order);
    return rep;
}

} // namespace trajmetric
