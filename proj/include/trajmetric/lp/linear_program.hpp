#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <string_view>
#include <vector>

namespace trajmetric::lp {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// min c'x  subject to  A x = b,  x >= 0.
struct LinearProgram {
    SparseMatrix constraints;
    Eigen::VectorXd rhs;
    Eigen::VectorXd cost;

    Eigen::Index num_rows() const { return constraints.rows(); }
    Eigen::Index num_vars() const { return constraints.cols(); }
};

struct LpResult {
    Eigen::VectorXd x;
    double objective = 0.0;
    int iterations = 0;
};

enum class LpBackend { automatic, simplex, interior_point };

inline std::string_view to_string(LpBackend b) {
    switch (b) {
    case LpBackend::simplex: return "simplex";
    case LpBackend::interior_point: return "interior_point";
    default: return "automatic";
    }
}

struct LpTolerances {
    double feasibility = 1e-9;
    double optimality = 1e-9;
};

/// Incremental builder for sparse standard-form programs.
class LpBuilder {
public:
    int add_variable(double cost) {
        cost_.push_back(cost);
        return static_cast<int>(cost_.size()) - 1;
    }
    int add_row(double rhs) {
        rhs_.push_back(rhs);
        return static_cast<int>(rhs_.size()) - 1;
    }
    void set(int row, int var, double coeff) { triplets_.emplace_back(row, var, coeff); }

    LinearProgram build() const {
        LinearProgram p;
        p.constraints.resize(static_cast<Eigen::Index>(rhs_.size()), static_cast<Eigen::Index>(cost_.size()));
        p.constraints.setFromTriplets(triplets_.begin(), triplets_.end());
        p.constraints.makeCompressed();
        p.rhs = Eigen::Map<const Eigen::VectorXd>(rhs_.data(), static_cast<Eigen::Index>(rhs_.size()));
        p.cost = Eigen::Map<const Eigen::VectorXd>(cost_.data(), static_cast<Eigen::Index>(cost_.size()));
        return p;
    }

private:
    std::vector<double> cost_;
    std::vector<double> rhs_;
    std::vector<Triplet> triplets_;
};

} // namespace trajmetric::lp
