#pragma once

#include <trajmetric/assignment.hpp>
#include <trajmetric/base_metric.hpp>
#include <trajmetric/core.hpp>
#include <trajmetric/gospa.hpp>

#include <cmath>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace trajmetric {

enum class SolverKind { exact, lp };

inline std::string_view to_string(SolverKind s) { return s == SolverKind::exact ? "exact" : "lp"; }

/// Per-step error terms, all p-th powers.
struct StepDecomposition {
    double expected_localization = 0.0;
    double existence_mismatch = 0.0;
    double expected_missed = 0.0;
    double expected_false = 0.0;
    /// Switching cost between step k and k+1; absent at the last step.
    std::optional<double> switch_to_next;

    double pth_power() const {
        return expected_localization + existence_mismatch + expected_missed + expected_false +
               switch_to_next.value_or(0.0);
    }
};

struct MetricReport {
    double total = 0.0;
    double order = 2.0;
    SolverKind solver = SolverKind::lp;
    std::vector<StepDecomposition> per_step;
    std::vector<WeightMatrix> weights;

    /// Step error (l + e + m + f + s)^(1/p), switch attributed to the earlier step.
    double step_error(std::size_t k) const { return std::pow(per_step.at(k).pth_power(), 1.0 / order); }
};

struct PtgospaOptions {
    SolverKind solver = SolverKind::lp;
    ExactSolverOptions exact{};
    LpSolverOptions lp{};
};

/// Cost-matrix entry categories: properly detected, missed, false, missed plus
/// false, or both absent.
enum class EntryCategory { t1, t2, t3, t4, absent };

namespace detail {

struct EntryTerms {
    EntryCategory category = EntryCategory::absent;
    double localization = 0.0;
    double mismatch = 0.0;
    double missed = 0.0;
    double false_det = 0.0;
    double base_distance = 0.0;

    double cost() const { return localization + mismatch + missed + false_det; }
};

/// D^k together with the attribution of every entry to the error terms.
struct StepTable {
    int nx = 0;
    int ny = 0;
    std::vector<EntryTerms> pairs; // row-major nx x ny
    std::vector<double> row_missed; // dummy column
    std::vector<double> col_false;  // dummy row

    const EntryTerms& at(int i, int j) const { return pairs[static_cast<std::size_t>(i * ny + j)]; }

    Matrix matrix() const {
        Matrix d = Matrix::Zero(nx + 1, ny + 1);
        for (int i = 0; i < nx; ++i) {
            for (int j = 0; j < ny; ++j) d(i, j) = at(i, j).cost();
            d(i, ny) = row_missed[static_cast<std::size_t>(i)];
        }
        for (int j = 0; j < ny; ++j) d(nx, j) = col_false[static_cast<std::size_t>(j)];
        return d;
    }
};

inline void check_compatible(const SequenceSet& truth, const SequenceSet& estimate) {
    require(truth.window_length() == estimate.window_length(),
            "window length mismatch between truth (" + std::to_string(truth.window_length()) + ") and estimate (" +
                std::to_string(estimate.window_length()) + ")");
    if (truth.dimension() && estimate.dimension()) {
        require(*truth.dimension() == *estimate.dimension(), "state dimension mismatch between truth and estimate");
    }
}

inline StepTable step_table(const SequenceSet& truth, const SequenceSet& estimate, int k, const MetricParams& params,
                            BaseMetricKind kind) {
    const double half = params.cutoff_pow() / 2.0;
    StepTable t;
    t.nx = static_cast<int>(truth.size());
    t.ny = static_cast<int>(estimate.size());
    std::vector<const BernoulliDensity*> xs, ys;
    for (std::size_t i = 0; i < truth.size(); ++i) xs.push_back(tau(truth, i, k));
    for (std::size_t j = 0; j < estimate.size(); ++j) ys.push_back(tau(estimate, j, k));

    t.pairs.resize(static_cast<std::size_t>(t.nx * t.ny));
    for (int i = 0; i < t.nx; ++i) {
        const auto* bx = xs[static_cast<std::size_t>(i)];
        for (int j = 0; j < t.ny; ++j) {
            const auto* by = ys[static_cast<std::size_t>(j)];
            auto& e = t.pairs[static_cast<std::size_t>(i * t.ny + j)];
            if (bx && by) {
                const auto pc = bernoulli_pair_cost(*bx, *by, params, kind);
                e.base_distance = pc.base_distance;
                if (pc.base_distance < params.cutoff) {
                    e.category = EntryCategory::t1;
                    e.localization = pc.localization;
                    e.mismatch = pc.existence_mismatch;
                } else {
                    e.category = EntryCategory::t4;
                    e.missed = bx->existence() * half;
                    e.false_det = by->existence() * half;
                }
            } else if (bx) {
                e.category = EntryCategory::t2;
                e.missed = bx->existence() * half;
            } else if (by) {
                e.category = EntryCategory::t3;
                e.false_det = by->existence() * half;
            }
        }
    }
    for (const auto* bx : xs) t.row_missed.push_back(bx ? bx->existence() * half : 0.0);
    for (const auto* by : ys) t.col_false.push_back(by ? by->existence() * half : 0.0);
    return t;
}

} // namespace detail

/// Per-step cost matrix between truth and estimate sequences at time k.
inline CostMatrix build_cost_matrix(const SequenceSet& truth, const SequenceSet& estimate, int k,
                                    const MetricParams& params, BaseMetricKind kind = BaseMetricKind::wasserstein2) {
    params.validate();
    detail::check_compatible(truth, estimate);
    if (k < 1 || k > truth.window_length()) {
        detail::domain_fail("build_cost_matrix: time step " + std::to_string(k) + " outside 1.." +
                            std::to_string(truth.window_length()));
    }
    return CostMatrix(detail::step_table(truth, estimate, k, params, kind).matrix());
}

/// Category of entry (i, j) of the step-k cost matrix (0-based indices).
inline EntryCategory entry_category(const SequenceSet& truth, const SequenceSet& estimate, int k, std::size_t i,
                                    std::size_t j, const MetricParams& params,
                                    BaseMetricKind kind = BaseMetricKind::wasserstein2) {
    detail::check_compatible(truth, estimate);
    return detail::step_table(truth, estimate, k, params, kind)
        .at(static_cast<int>(i), static_cast<int>(j))
        .category;
}

/// Trajectory metric between a set of Bernoulli sequences (truth) and another
/// (estimate), with its per-step decomposition at the optimal weights.
inline MetricReport ptgospa(const SequenceSet& truth, const SequenceSet& estimate, const MetricParams& params,
                            BaseMetricKind kind = BaseMetricKind::wasserstein2, const PtgospaOptions& options = {}) {
    params.validate();
    detail::check_compatible(truth, estimate);
    const int window = truth.window_length();

    std::vector<detail::StepTable> tables;
    std::vector<CostMatrix> costs;
    tables.reserve(static_cast<std::size_t>(window));
    costs.reserve(static_cast<std::size_t>(window));
    for (int k = 1; k <= window; ++k) {
        tables.push_back(detail::step_table(truth, estimate, k, params, kind));
        costs.emplace_back(tables.back().matrix());
    }

    SolverSolution sol = options.solver == SolverKind::exact
                             ? solve_exact_dp(costs, params.switch_cost, params.order, options.exact)
                             : solve_lp(costs, params.switch_cost, params.order, options.lp);

    MetricReport rep;
    rep.order = params.order;
    rep.solver = options.solver;
    rep.per_step.resize(static_cast<std::size_t>(window));
    const double half_switch = params.switch_pow() / 2.0;
    double sum = 0.0;
    for (std::size_t k = 0; k < tables.size(); ++k) {
        const auto& t = tables[k];
        const Matrix& w = sol.weights[k].entries;
        auto& step = rep.per_step[k];
        for (int i = 0; i < t.nx; ++i) {
            for (int j = 0; j < t.ny; ++j) {
                const double wij = w(i, j);
                if (wij == 0.0) continue;
                const auto& e = t.at(i, j);
                step.expected_localization += wij * e.localization;
                step.existence_mismatch += wij * e.mismatch;
                step.expected_missed += wij * e.missed;
                step.expected_false += wij * e.false_det;
            }
            step.expected_missed += w(i, t.ny) * t.row_missed[static_cast<std::size_t>(i)];
        }
        for (int j = 0; j < t.ny; ++j) step.expected_false += w(t.nx, j) * t.col_false[static_cast<std::size_t>(j)];
        if (k + 1 < tables.size()) {
            const Matrix& next = sol.weights[k + 1].entries;
            step.switch_to_next =
                half_switch * (w.topLeftCorner(t.nx, t.ny) - next.topLeftCorner(t.nx, t.ny)).cwiseAbs().sum();
        }
        sum += step.pth_power();
    }
    rep.total = std::pow(std::max(sum, 0.0), 1.0 / params.order);
    rep.weights = std::move(sol.weights);
    return rep;
}

/// Trajectory GOSPA between point trajectories: both sides are lifted to
/// sequences with existence one and Dirac densities.
inline MetricReport tgospa(const std::vector<PointTrajectory>& truth, const std::vector<PointTrajectory>& estimate,
                           int window_length, const MetricParams& params,
                           BaseMetricKind kind = BaseMetricKind::wasserstein2, const PtgospaOptions& options = {}) {
    return ptgospa(lift_ground_truth(truth, window_length), lift_ground_truth(estimate, window_length), params, kind,
                   options);
}

/// Replaces every density by a Dirac at its mean with existence one, keeping
/// only steps whose existence probability reaches `threshold`. Sequences are
/// split where steps are dropped.
inline SequenceSet point_estimates(const SequenceSet& set, double threshold = 0.5) {
    detail::require(threshold > 0.0 && threshold <= 1.0, "point_estimates: threshold must be in (0, 1]");
    std::vector<BernoulliSequence> out;
    for (const auto& s : set.sequences()) {
        std::vector<BernoulliDensity> run;
        int start = 0;
        for (int v = 0; v < s.length(); ++v) {
            const auto& b = s.densities()[static_cast<std::size_t>(v)];
            if (b.existence() >= threshold) {
                if (run.empty()) start = s.start_time() + v;
                run.emplace_back(1.0, DiracDensity(mean_of(b.density())));
            } else if (!run.empty()) {
                out.emplace_back(start, std::move(run));
                run.clear();
            }
        }
        if (!run.empty()) out.emplace_back(start, std::move(run));
    }
    return SequenceSet(set.window_length(), std::move(out));
}

/// Weighted global hypotheses; weights positive and summing to one.
class HypothesisMixture {
public:
    HypothesisMixture(std::vector<std::pair<double, SequenceSet>> hypotheses) : hypotheses_(std::move(hypotheses)) {
        detail::require(!hypotheses_.empty(), "HypothesisMixture: at least one hypothesis required");
        double sum = 0.0;
        for (const auto& [w, s] : hypotheses_) {
            detail::require(std::isfinite(w) && w > 0.0, "HypothesisMixture: weights must be > 0");
            sum += w;
        }
        detail::require(std::abs(sum - 1.0) <= 1e-9, "HypothesisMixture: weights must sum to 1");
    }

    const std::vector<std::pair<double, SequenceSet>>& hypotheses() const noexcept { return hypotheses_; }

private:
    std::vector<std::pair<double, SequenceSet>> hypotheses_;
};

/// Weighted sum of per-hypothesis totals. A reporting convenience, not a metric.
inline double weighted_ptgospa(const SequenceSet& truth, const HypothesisMixture& mixture, const MetricParams& params,
                               BaseMetricKind kind = BaseMetricKind::wasserstein2,
                               const PtgospaOptions& options = {}) {
    double out = 0.0;
    for (const auto& [w, est] : mixture.hypotheses()) out += w * ptgospa(truth, est, params, kind, options).total;
    return out;
}

/// Sum over time of the single-step set metric, with no switching term. With
/// `points` set, GOSPA between the means is used; otherwise PGOSPA.
inline MetricReport stepwise_set_metric(const SequenceSet& truth, const SequenceSet& estimate,
                                        const MetricParams& params, BaseMetricKind kind, bool points) {
    params.validate();
    detail::check_compatible(truth, estimate);
    MetricReport rep;
    rep.order = params.order;
    rep.solver = SolverKind::exact;
    double sum = 0.0;
    for (int k = 1; k <= truth.window_length(); ++k) {
        StepDecomposition step;
        const auto xs = tau(truth, k);
        const auto ys = tau(estimate, k);
        if (points) {
            StateSet px, py;
            for (const auto* b : xs) px.push_back(mean_of(b->density()));
            for (const auto* b : ys) py.push_back(mean_of(b->density()));
            const auto g = gospa(px, py, params, kind);
            step.expected_localization = g.localization;
            step.expected_missed = g.missed;
            step.expected_false = g.false_det;
        } else {
            std::vector<BernoulliDensity> bx, by;
            for (const auto* b : xs) bx.push_back(*b);
            for (const auto* b : ys) by.push_back(*b);
            const auto g = pgospa(MultiBernoulli(std::move(bx)), MultiBernoulli(std::move(by)), params, kind);
            step.expected_localization = g.expected_localization;
            step.existence_mismatch = g.existence_mismatch;
            step.expected_missed = g.expected_missed;
            step.expected_false = g.expected_false;
        }
        if (k < truth.window_length()) step.switch_to_next = 0.0;
        sum += step.pth_power();
        rep.per_step.push_back(step);
    }
    rep.total = std::pow(sum, 1.0 / params.order);
    return rep;
}

} // namespace trajmetric
