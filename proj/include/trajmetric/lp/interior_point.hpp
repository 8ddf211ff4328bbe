#pragma once

#include <trajmetric/error.hpp>
#include <trajmetric/lp/linear_program.hpp>

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace trajmetric::lp {

/// Mehrotra predictor-corrector primal-dual interior point method on the
/// normal equations, factored with a sparse LDL^T. Intended for programs too
/// large for the dense tableau; returns an interior approximation of an
/// optimal point, accurate to the configured relative gap.
class InteriorPoint {
public:
    explicit InteriorPoint(LpTolerances tol = {}, int max_iterations = 200)
        : tol_(tol), max_iterations_(max_iterations) {}

    LpResult solve(const LinearProgram& prog) const {
        const SparseMatrix& a = prog.constraints;
        const Eigen::VectorXd& b = prog.rhs;
        const Eigen::VectorXd& c = prog.cost;
        const Eigen::Index n = prog.num_vars();
        const Eigen::Index m = prog.num_rows();
        if (m == 0) {
            // Unconstrained non-negative variables: optimum at zero unless a cost is negative.
            if (n > 0 && c.minCoeff() < 0.0) throw SolverError("interior point: LP unbounded");
            return {Eigen::VectorXd::Zero(n), 0.0, 0};
        }
        const SparseMatrix at = a.transpose();

        Eigen::SimplicialLDLT<SparseMatrix> ldlt;
        bool analyzed = false;
        auto factor = [&](const Eigen::VectorXd& d) {
            SparseMatrix normal = a * d.asDiagonal() * at;
            double shift = 1e-14 * std::max(1.0, normal.diagonal().cwiseAbs().maxCoeff());
            for (int attempt = 0; attempt < 8; ++attempt) {
                ldlt.setShift(shift);
                if (!analyzed) {
                    ldlt.analyzePattern(normal);
                    analyzed = true;
                }
                ldlt.factorize(normal);
                if (ldlt.info() == Eigen::Success) return;
                shift *= 100.0;
            }
            throw SolverError("interior point: normal equations could not be factored");
        };

        // Mehrotra starting point.
        Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
        factor(ones);
        Eigen::VectorXd x = at * ldlt.solve(b);
        Eigen::VectorXd y = ldlt.solve(a * c);
        Eigen::VectorXd z = c - at * y;
        {
            const double dx = std::max(-1.5 * x.minCoeff(), 0.0);
            const double dz = std::max(-1.5 * z.minCoeff(), 0.0);
            x.array() += dx;
            z.array() += dz;
            const double xz = x.dot(z);
            const double ddx = 0.5 * xz / std::max(z.sum(), 1e-300);
            const double ddz = 0.5 * xz / std::max(x.sum(), 1e-300);
            x.array() += ddx;
            z.array() += ddz;
            if (!(x.minCoeff() > 0.0)) x.array() += 1.0;
            if (!(z.minCoeff() > 0.0)) z.array() += 1.0;
        }

        const double bnorm = 1.0 + b.cwiseAbs().maxCoeff();
        const double cnorm = 1.0 + c.cwiseAbs().maxCoeff();
        double pres = 0.0, dres = 0.0, gap = 0.0;

        for (int it = 0; it < max_iterations_; ++it) {
            const Eigen::VectorXd rp = b - a * x;
            const Eigen::VectorXd rd = c - at * y - z;
            const double pobj = c.dot(x);
            const double dobj = b.dot(y);
            pres = rp.cwiseAbs().maxCoeff() / bnorm;
            dres = rd.cwiseAbs().maxCoeff() / cnorm;
            gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj));
            if (pres <= tol_.feasibility && dres <= tol_.feasibility && gap <= tol_.optimality) {
                LpResult res;
                res.x = x.cwiseMax(0.0);
                res.objective = c.dot(res.x);
                res.iterations = it;
                return res;
            }

            const double mu = x.dot(z) / static_cast<double>(n);
            const Eigen::VectorXd d = x.cwiseQuotient(z);
            factor(d);

            auto direction = [&](const Eigen::VectorXd& rc, Eigen::VectorXd& dx, Eigen::VectorXd& dy,
                                 Eigen::VectorXd& dz) {
                const Eigen::VectorXd zinv_rc = rc.cwiseQuotient(z);
                const Eigen::VectorXd rhs = rp - a * (zinv_rc - d.cwiseProduct(rd));
                dy = ldlt.solve(rhs);
                dz = rd - at * dy;
                dx = zinv_rc - d.cwiseProduct(dz);
            };

            Eigen::VectorXd dxa, dya, dza;
            const Eigen::VectorXd xz = x.cwiseProduct(z);
            direction(-xz, dxa, dya, dza);
            const double ap_aff = std::min(1.0, max_step(x, dxa));
            const double ad_aff = std::min(1.0, max_step(z, dza));
            const double mu_aff =
                (x + ap_aff * dxa).dot(z + ad_aff * dza) / static_cast<double>(n);
            const double sigma = std::pow(mu_aff / mu, 3.0);

            Eigen::VectorXd dx, dy, dz;
            const Eigen::VectorXd rc =
                (Eigen::VectorXd::Constant(n, sigma * mu) - xz - dxa.cwiseProduct(dza)).eval();
            direction(rc, dx, dy, dz);
            if (!dx.allFinite() || !dy.allFinite() || !dz.allFinite()) break;

            const double eta = std::max(0.9, 1.0 - 10.0 * mu / std::max(1.0, std::abs(pobj)));
            const double ap = std::min(1.0, eta * max_step(x, dx));
            const double ad = std::min(1.0, eta * max_step(z, dz));
            x += ap * dx;
            y += ad * dy;
            z += ad * dz;
        }

        std::ostringstream msg;
        msg << "interior point: no convergence (primal residual " << pres << ", dual residual " << dres
            << ", relative gap " << gap << ")";
        throw SolverError(msg.str());
    }

private:
    LpTolerances tol_;
    int max_iterations_;

    static double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
        double alpha = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
        }
        return std::min(alpha, 1.0e300);
    }
};

} // namespace trajmetric::lp
