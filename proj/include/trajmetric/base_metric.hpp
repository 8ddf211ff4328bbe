#pragma once

#include <trajmetric/core.hpp>

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string_view>

namespace trajmetric {

enum class BaseMetricKind {
    wasserstein2,    ///< 2-Wasserstein between densities (Diracs have zero covariance)
    euclidean_means, ///< distance between means, covariances ignored
};

inline std::string_view to_string(BaseMetricKind k) {
    return k == BaseMetricKind::wasserstein2 ? "wasserstein2" : "euclidean";
}

namespace detail {

inline int compare_vectors(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a.data()[i] < b.data()[i]) return -1;
        if (a.data()[i] > b.data()[i]) return 1;
    }
    return 0;
}

/// Total order on densities; evaluating in canonical order makes the
/// distances bit-for-bit symmetric.
inline int compare_densities(const Density& a, const Density& b) {
    if (a.index() != b.index()) return a.index() < b.index() ? -1 : 1;
    if (int c = compare_vectors(mean_of(a), mean_of(b)); c != 0) return c;
    if (const auto* ga = std::get_if<GaussianDensity>(&a)) {
        return compare_vectors(ga->covariance(), std::get<GaussianDensity>(b).covariance());
    }
    return 0;
}

inline void check_same_dimension(const Density& a, const Density& b) {
    require(dimension_of(a) == dimension_of(b), "base metric: state dimension mismatch");
}

inline double wasserstein2_ordered(const Density& a, const Density& b) {
    const auto* ga = std::get_if<GaussianDensity>(&a);
    const auto* gb = std::get_if<GaussianDensity>(&b);
    if (!ga && !gb) return (mean_of(a) - mean_of(b)).norm();

    double d2 = (mean_of(a) - mean_of(b)).squaredNorm();
    if (ga && gb) {
        // tr((Sb Sa Sa Sb)^{1/2}) is the nuclear norm of Sb * Sa.
        const Matrix cross = gb->sqrt_covariance() * ga->sqrt_covariance();
        Eigen::JacobiSVD<Matrix> svd(cross);
        d2 += ga->trace() + gb->trace() - 2.0 * svd.singularValues().sum();
    } else {
        d2 += ga ? ga->trace() : gb->trace();
    }
    return std::sqrt(std::max(d2, 0.0));
}

} // namespace detail

/// Closed-form 2-Wasserstein distance between Gaussian/Dirac densities.
inline double wasserstein2(const Density& a, const Density& b) {
    detail::check_same_dimension(a, b);
    const int order = detail::compare_densities(a, b);
    if (order == 0) return 0.0;
    return order < 0 ? detail::wasserstein2_ordered(a, b) : detail::wasserstein2_ordered(b, a);
}

inline double euclidean_means(const Density& a, const Density& b) {
    detail::check_same_dimension(a, b);
    const int order = detail::compare_densities(a, b);
    if (order == 0) return 0.0;
    return order < 0 ? (mean_of(a) - mean_of(b)).norm() : (mean_of(b) - mean_of(a)).norm();
}

inline double base_distance(BaseMetricKind kind, const Density& a, const Density& b) {
    return kind == BaseMetricKind::wasserstein2 ? wasserstein2(a, b) : euclidean_means(a, b);
}

inline double base_distance(BaseMetricKind kind, const StateVector& a, const StateVector& b) {
    detail::require(a.size() == b.size(), "base metric: state dimension mismatch");
    (void)kind; // both kinds coincide on points
    return detail::compare_vectors(a, b) <= 0 ? (a - b).norm() : (b - a).norm();
}

} // namespace trajmetric
