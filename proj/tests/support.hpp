#pragma once

// Brute-force oracles and random instance generators shared by the unit and
// acceptance tests. Oracles enumerate every admissible assignment and evaluate
// the metric definitions directly; they never build cost matrices.

#include <trajmetric/base_metric.hpp>
#include <trajmetric/core.hpp>
#include <trajmetric/gospa.hpp>
#include <trajmetric/metric.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace tmtest {

using namespace trajmetric;

/// All injective-on-nonzero vectors in {0..ny}^nx, in lexicographic order.
inline std::vector<std::vector<int>> assignment_vectors(int nx, int ny) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(static_cast<std::size_t>(nx), 0);
    std::vector<char> used(static_cast<std::size_t>(ny) + 1, 0);
    std::function<void(int)> rec = [&](int i) {
        if (i == nx) {
            out.push_back(cur);
            return;
        }
        for (int t = 0; t <= ny; ++t) {
            if (t > 0 && used[static_cast<std::size_t>(t)]) continue;
            cur[static_cast<std::size_t>(i)] = t;
            if (t > 0) used[static_cast<std::size_t>(t)] = 1;
            rec(i + 1);
            if (t > 0) used[static_cast<std::size_t>(t)] = 0;
        }
    };
    rec(0);
    return out;
}

/// GOSPA (alpha = 2) to the p-th power by enumeration of assignment sets.
inline double brute_gospa_pth(const StateSet& x, const StateSet& y, const MetricParams& prm) {
    double best = std::numeric_limits<double>::infinity();
    const double half = prm.cutoff_pow() / 2.0;
    for (const auto& pi : assignment_vectors(static_cast<int>(x.size()), static_cast<int>(y.size()))) {
        double cost = 0.0;
        std::size_t matched = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (pi[i] == 0) continue;
            const double d = (x[i] - y[static_cast<std::size_t>(pi[i] - 1)]).norm();
            cost += std::pow(std::min(d, prm.cutoff), prm.order);
            ++matched;
        }
        cost += half * static_cast<double>(x.size() + y.size() - 2 * matched);
        best = std::min(best, cost);
    }
    return best;
}

/// PGOSPA to the p-th power by enumeration of assignment sets.
inline double brute_pgospa_pth(const std::vector<BernoulliDensity>& x, const std::vector<BernoulliDensity>& y,
                               const MetricParams& prm, BaseMetricKind kind) {
    double best = std::numeric_limits<double>::infinity();
    const double half = prm.cutoff_pow() / 2.0;
    for (const auto& pi : assignment_vectors(static_cast<int>(x.size()), static_cast<int>(y.size()))) {
        double cost = 0.0;
        std::vector<char> used(y.size(), 0);
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (pi[i] == 0) {
                cost += x[i].existence() * half;
                continue;
            }
            const auto& by = y[static_cast<std::size_t>(pi[i] - 1)];
            used[static_cast<std::size_t>(pi[i] - 1)] = 1;
            const double d = std::min(base_distance(kind, x[i].density(), by.density()), prm.cutoff);
            cost += std::min(x[i].existence(), by.existence()) * std::pow(d, prm.order) +
                    std::abs(x[i].existence() - by.existence()) * half;
        }
        for (std::size_t j = 0; j < y.size(); ++j) {
            if (!used[j]) cost += y[j].existence() * half;
        }
        best = std::min(best, cost);
    }
    return best;
}

/// Step cost of assignment vector pi at time k, straight from the definition:
/// induced pairs with both densities present and base distance below c pay the
/// single-Bernoulli PGOSPA value; every other present density pays r c^p / 2.
inline double step_cost(const SequenceSet& x, const SequenceSet& y, int k, const std::vector<int>& pi,
                        const MetricParams& prm, BaseMetricKind kind) {
    const double half = prm.cutoff_pow() / 2.0;
    std::vector<char> x_in(x.size(), 0), y_in(y.size(), 0);
    double cost = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (pi[i] == 0) continue;
        const auto j = static_cast<std::size_t>(pi[i] - 1);
        const auto* bx = tau(x, i, k);
        const auto* by = tau(y, j, k);
        if (!bx || !by) continue;
        const double d = base_distance(kind, bx->density(), by->density());
        if (!(d < prm.cutoff)) continue;
        x_in[i] = y_in[j] = 1;
        cost += std::min(bx->existence(), by->existence()) * std::pow(d, prm.order) +
                std::abs(bx->existence() - by->existence()) * half;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (const auto* b = tau(x, i, k); b && !x_in[i]) cost += b->existence() * half;
    }
    for (std::size_t j = 0; j < y.size(); ++j) {
        if (const auto* b = tau(y, j, k); b && !y_in[j]) cost += b->existence() * half;
    }
    return cost;
}

inline double switch_cost(const std::vector<int>& a, const std::vector<int>& b, const MetricParams& prm) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == b[i]) continue;
        s += (a[i] != 0 && b[i] != 0) ? 1.0 : 0.5;
    }
    return prm.switch_pow() * s;
}

/// Trajectory metric to the p-th power by enumerating every K-tuple of
/// assignment vectors.
inline double brute_ptgospa_pth(const SequenceSet& x, const SequenceSet& y, const MetricParams& prm,
                                BaseMetricKind kind = BaseMetricKind::wasserstein2) {
    const int window = x.window_length();
    const auto vecs = assignment_vectors(static_cast<int>(x.size()), static_cast<int>(y.size()));
    std::vector<std::vector<double>> node(static_cast<std::size_t>(window), std::vector<double>(vecs.size()));
    for (int k = 1; k <= window; ++k) {
        for (std::size_t v = 0; v < vecs.size(); ++v) {
            node[static_cast<std::size_t>(k - 1)][v] = step_cost(x, y, k, vecs[v], prm, kind);
        }
    }
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> idx(static_cast<std::size_t>(window), 0);
    for (;;) {
        double cost = 0.0;
        for (int k = 0; k < window; ++k) {
            cost += node[static_cast<std::size_t>(k)][idx[static_cast<std::size_t>(k)]];
            if (k + 1 < window) {
                cost += switch_cost(vecs[idx[static_cast<std::size_t>(k)]], vecs[idx[static_cast<std::size_t>(k + 1)]], prm);
            }
        }
        best = std::min(best, cost);
        int k = window - 1;
        while (k >= 0 && ++idx[static_cast<std::size_t>(k)] == vecs.size()) idx[static_cast<std::size_t>(k--)] = 0;
        if (k < 0) break;
    }
    return best;
}

/// Hand-rolled generators for property tests.
class Generator {
public:
    explicit Generator(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }

    StateVector point(int dim = 2, double box = 12.0) {
        StateVector v(dim);
        for (int d = 0; d < dim; ++d) v(d) = uniform(0.0, box);
        return v;
    }

    Matrix covariance(int dim = 2) {
        Matrix a(dim, dim);
        for (int r = 0; r < dim; ++r) {
            for (int c = 0; c < dim; ++c) a(r, c) = uniform(-1.0, 1.0);
        }
        Matrix s = a * a.transpose() + uniform(0.0, 0.5) * Matrix::Identity(dim, dim);
        return 0.5 * (s + s.transpose());
    }

    Density density(int dim = 2, double dirac_prob = 0.4) {
        if (coin(dirac_prob)) return DiracDensity(point(dim));
        return GaussianDensity(point(dim), covariance(dim));
    }

    double existence() {
        const double u = uniform(0.0, 1.0);
        if (u < 0.25) return 1.0;
        if (u < 0.35) return 0.5;
        return uniform(0.05, 1.0);
    }

    BernoulliSequence sequence(int window, int dim = 2, double dirac_prob = 0.4) {
        const int start = integer(1, window);
        const int len = integer(1, window - start + 1);
        std::vector<BernoulliDensity> steps;
        for (int v = 0; v < len; ++v) steps.emplace_back(existence(), density(dim, dirac_prob));
        return BernoulliSequence(start, std::move(steps));
    }

    SequenceSet sequence_set(int window, int max_n, int dim = 2, double dirac_prob = 0.4) {
        const int n = integer(0, max_n);
        std::vector<BernoulliSequence> seqs;
        for (int i = 0; i < n; ++i) seqs.push_back(sequence(window, dim, dirac_prob));
        return SequenceSet(window, std::move(seqs));
    }

    /// Existence one and Dirac densities throughout.
    SequenceSet point_set(int window, int max_n, int dim = 2) {
        const int n = integer(0, max_n);
        std::vector<PointTrajectory> tr;
        for (int i = 0; i < n; ++i) {
            const int start = integer(1, window);
            const int len = integer(1, window - start + 1);
            PointTrajectory t{start, {}};
            for (int v = 0; v < len; ++v) t.states.push_back(point(dim));
            tr.push_back(std::move(t));
        }
        return lift_ground_truth(tr, window);
    }

    std::vector<BernoulliDensity> multi_bernoulli(int max_n, int dim = 2) {
        std::vector<BernoulliDensity> out;
        const int n = integer(0, max_n);
        for (int i = 0; i < n; ++i) out.emplace_back(existence(), density(dim));
        return out;
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

inline std::vector<BernoulliDensity> at_step(const SequenceSet& s, int k) {
    std::vector<BernoulliDensity> out;
    for (const auto* b : tau(s, k)) out.push_back(*b);
    return out;
}

inline double decomposition_sum(const MetricReport& r) {
    double s = 0.0;
    for (const auto& st : r.per_step) s += st.pth_power();
    return s;
}

/// Largest violation of the bound d_P < c ((r_x + r_y) / 2)^(1/p) over pairs
/// that receive positive weight while in the properly-detected category;
/// negative when every such pair satisfies it strictly.
inline double t1_bound_margin(const SequenceSet& x, const SequenceSet& y, const MetricReport& rep,
                              const MetricParams& prm, BaseMetricKind kind, std::size_t* checked = nullptr) {
    double worst = -std::numeric_limits<double>::infinity();
    for (int k = 1; k <= x.window_length(); ++k) {
        const auto& w = rep.weights[static_cast<std::size_t>(k - 1)].entries;
        for (std::size_t i = 0; i < x.size(); ++i) {
            for (std::size_t j = 0; j < y.size(); ++j) {
                if (w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) <= 0.0) continue;
                if (entry_category(x, y, k, i, j, prm, kind) != EntryCategory::t1) continue;
                const auto* bx = tau(x, i, k);
                const auto* by = tau(y, j, k);
                const double dp = pgospa_bernoulli(*bx, *by, prm, kind);
                const double bound = prm.cutoff * std::pow((bx->existence() + by->existence()) / 2.0, 1.0 / prm.order);
                worst = std::max(worst, dp - bound);
                if (checked) ++*checked;
            }
        }
    }
    return worst;
}

} // namespace tmtest
