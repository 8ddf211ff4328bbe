#pragma once

#include <trajmetric/error.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace trajmetric {

using StateVector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kPsdTolerance = 1e-12;

namespace detail {

inline bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

} // namespace detail

/// Point mass at a single state. Ground truth states are Diracs.
class DiracDensity {
public:
    explicit DiracDensity(StateVector point) : point_(std::move(point)) {
        detail::require(point_.size() >= 1, "DiracDensity: empty state vector");
        detail::require(detail::all_finite(point_), "DiracDensity: non-finite coordinate");
    }

    const StateVector& point() const noexcept { return point_; }
    const StateVector& mean() const noexcept { return point_; }
    Eigen::Index dimension() const noexcept { return point_.size(); }

    friend bool operator==(const DiracDensity& a, const DiracDensity& b) {
        return a.point_.size() == b.point_.size() && a.point_ == b.point_;
    }

private:
    StateVector point_;
};

/// Gaussian single-object density N(mean, covariance).
///
/// The covariance must be symmetric and positive semidefinite up to 1e-12;
/// slightly negative eigenvalues are clamped when the square root is formed.
class GaussianDensity {
public:
    GaussianDensity(StateVector mean, Matrix covariance)
        : mean_(std::move(mean)), covariance_(std::move(covariance)) {
        const auto d = mean_.size();
        detail::require(d >= 1, "GaussianDensity: empty mean");
        detail::require(detail::all_finite(mean_), "GaussianDensity: non-finite mean");
        detail::require(covariance_.rows() == d && covariance_.cols() == d,
                        "GaussianDensity: covariance shape does not match mean dimension");
        detail::require(detail::all_finite(covariance_), "GaussianDensity: non-finite covariance");
        const double asym = (covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff();
        detail::require(asym <= kSymmetryTolerance, "GaussianDensity: covariance is not symmetric");
        const Matrix sym = 0.5 * (covariance_ + covariance_.transpose());
        Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
        detail::require(eig.eigenvalues().minCoeff() >= -kPsdTolerance,
                        "GaussianDensity: covariance is not positive semidefinite");
        Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
        sqrt_covariance_ =
            eig.eigenvectors() * lambda.cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
        trace_ = lambda.sum();
    }

    const StateVector& mean() const noexcept { return mean_; }
    const Matrix& covariance() const noexcept { return covariance_; }
    /// Symmetric square root of the (clamped) covariance.
    const Matrix& sqrt_covariance() const noexcept { return sqrt_covariance_; }
    /// Trace of the clamped covariance.
    double trace() const noexcept { return trace_; }
    Eigen::Index dimension() const noexcept { return mean_.size(); }

    friend bool operator==(const GaussianDensity& a, const GaussianDensity& b) {
        return a.mean_.size() == b.mean_.size() && a.mean_ == b.mean_ &&
               a.covariance_ == b.covariance_;
    }

private:
    StateVector mean_;
    Matrix covariance_;
    Matrix sqrt_covariance_;
    double trace_ = 0.0;
};

using Density = std::variant<DiracDensity, GaussianDensity>;

inline const StateVector& mean_of(const Density& d) {
    return std::visit([](const auto& x) -> const StateVector& { return x.mean(); }, d);
}

inline Eigen::Index dimension_of(const Density& d) {
    return std::visit([](const auto& x) { return x.dimension(); }, d);
}

inline bool is_dirac(const Density& d) { return std::holds_alternative<DiracDensity>(d); }

/// Bernoulli set density: empty with probability 1 - r, otherwise one object
/// distributed according to the single-object density.
class BernoulliDensity {
public:
    BernoulliDensity(double existence, Density density)
        : existence_(existence), density_(std::move(density)) {
        detail::require(std::isfinite(existence_) && existence_ >= 0.0 && existence_ <= 1.0,
                        "BernoulliDensity: existence probability outside [0, 1]");
    }

    double existence() const noexcept { return existence_; }
    const Density& density() const noexcept { return density_; }
    Eigen::Index dimension() const { return dimension_of(density_); }

    friend bool operator==(const BernoulliDensity& a, const BernoulliDensity& b) {
        return a.existence_ == b.existence_ && a.density_ == b.density_;
    }

private:
    double existence_;
    Density density_;
};

/// A start time plus Bernoulli densities at consecutive time steps (1-based).
class BernoulliSequence {
public:
    BernoulliSequence(int start_time, std::vector<BernoulliDensity> densities)
        : start_time_(start_time), densities_(std::move(densities)) {
        detail::require(start_time_ >= 1, "BernoulliSequence: start time must be >= 1");
        detail::require(!densities_.empty(), "BernoulliSequence: at least one time step required");
        const auto d = densities_.front().dimension();
        for (const auto& b : densities_) {
            detail::require(b.existence() > 0.0,
                            "BernoulliSequence: zero existence probability (drop the time step instead)");
            detail::require(b.dimension() == d, "BernoulliSequence: inconsistent state dimension");
        }
    }

    int start_time() const noexcept { return start_time_; }
    int length() const noexcept { return static_cast<int>(densities_.size()); }
    int end_time() const noexcept { return start_time_ + length() - 1; }
    Eigen::Index dimension() const { return densities_.front().dimension(); }
    const std::vector<BernoulliDensity>& densities() const noexcept { return densities_; }

    bool alive_at(int k) const noexcept { return k >= start_time_ && k <= end_time(); }

    friend bool operator==(const BernoulliSequence&, const BernoulliSequence&) = default;

private:
    int start_time_;
    std::vector<BernoulliDensity> densities_;
};

/// Set of Bernoulli sequences over the window 1..K. Order is storage order only.
class SequenceSet {
public:
    explicit SequenceSet(int window_length, std::vector<BernoulliSequence> sequences = {})
        : window_length_(window_length), sequences_(std::move(sequences)) {
        detail::require(window_length_ >= 1, "SequenceSet: window length must be >= 1");
        std::optional<Eigen::Index> dim;
        for (const auto& s : sequences_) {
            detail::require(s.end_time() <= window_length_,
                            "SequenceSet: sequence ends after the window (t + v - 1 > K)");
            if (dim) {
                detail::require(*dim == s.dimension(), "SequenceSet: inconsistent state dimension");
            } else {
                dim = s.dimension();
            }
        }
        dimension_ = dim;
    }

    int window_length() const noexcept { return window_length_; }
    std::size_t size() const noexcept { return sequences_.size(); }
    bool empty() const noexcept { return sequences_.empty(); }
    const std::vector<BernoulliSequence>& sequences() const noexcept { return sequences_; }
    const BernoulliSequence& operator[](std::size_t i) const { return sequences_[i]; }
    /// State dimension, or nothing for an empty set.
    std::optional<Eigen::Index> dimension() const noexcept { return dimension_; }

    friend bool operator==(const SequenceSet&, const SequenceSet&) = default;

private:
    int window_length_;
    std::vector<BernoulliSequence> sequences_;
    std::optional<Eigen::Index> dimension_;
};

/// Cut-off c, order p and switching cost gamma. The GOSPA alpha is fixed to 2.
struct MetricParams {
    double cutoff = 10.0;
    double order = 2.0;
    double switch_cost = 2.0;

    void validate() const {
        detail::require(std::isfinite(cutoff) && cutoff > 0.0, "MetricParams: cut-off must be > 0");
        detail::require(std::isfinite(order) && order >= 1.0, "MetricParams: order p must be >= 1");
        detail::require(std::isfinite(switch_cost) && switch_cost > 0.0,
                        "MetricParams: switching cost must be > 0");
    }

    double cutoff_pow() const { return std::pow(cutoff, order); }
    double switch_pow() const { return std::pow(switch_cost, order); }
};

/// Bernoulli density of `sequence` at time step k, or nullptr when the sequence
/// does not exist at k.
inline const BernoulliDensity* tau(const BernoulliSequence& sequence, int k, int window_length) {
    if (k < 1 || k > window_length) {
        detail::domain_fail("tau: time step " + std::to_string(k) + " outside 1.." +
                            std::to_string(window_length));
    }
    if (!sequence.alive_at(k)) return nullptr;
    return &sequence.densities()[static_cast<std::size_t>(k - sequence.start_time())];
}

inline const BernoulliDensity* tau(const SequenceSet& set, std::size_t index, int k) {
    return tau(set[index], k, set.window_length());
}

/// Densities present at time k across the whole set.
inline std::vector<const BernoulliDensity*> tau(const SequenceSet& set, int k) {
    std::vector<const BernoulliDensity*> out;
    for (const auto& s : set.sequences()) {
        if (const auto* b = tau(s, k, set.window_length())) out.push_back(b);
    }
    return out;
}

struct PointTrajectory {
    int start_time = 1;
    std::vector<StateVector> states;
};

/// Ground-truth trajectories as sequences with r = 1 and Dirac densities.
inline SequenceSet lift_ground_truth(const std::vector<PointTrajectory>& trajectories,
                                     int window_length) {
    detail::require(window_length >= 1, "lift_ground_truth: window length must be >= 1");
    std::vector<BernoulliSequence> out;
    out.reserve(trajectories.size());
    for (const auto& tr : trajectories) {
        detail::require(tr.start_time >= 1 && !tr.states.empty() &&
                            tr.start_time + static_cast<int>(tr.states.size()) - 1 <= window_length,
                        "lift_ground_truth: trajectory does not fit in the window");
        std::vector<BernoulliDensity> steps;
        steps.reserve(tr.states.size());
        for (const auto& x : tr.states) steps.emplace_back(1.0, DiracDensity(x));
        out.emplace_back(tr.start_time, std::move(steps));
    }
    return SequenceSet(window_length, std::move(out));
}

} // namespace trajmetric
