#include "numsplit/lsq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace numsplit::lsq {

namespace {

Eigen::VectorXd project(Eigen::VectorXd p, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
    return p.cwiseMax(lower).cwiseMin(upper);
}

}  // namespace

Result minimize(const Model& model, Eigen::VectorXd initial, const Eigen::VectorXd& lower,
                const Eigen::VectorXd& upper, const Options& options) {
    const Eigen::Index n = initial.size();
    Result best;
    best.params = project(std::move(initial), lower, upper);
    model(best.params, best.residuals, &best.jacobian);
    best.cost = 0.5 * best.residuals.squaredNorm();
    if (!std::isfinite(best.cost)) {
        best.message = "non-finite residuals at the initial guess";
        return best;
    }

    double damping = options.initial_damping;
    Eigen::VectorXd trial_residuals;
    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        best.iterations = iter;
        const Eigen::MatrixXd jtj = best.jacobian.transpose() * best.jacobian;
        const Eigen::VectorXd gradient = best.jacobian.transpose() * best.residuals;
        if (gradient.lpNorm<Eigen::Infinity>() == 0.0 || best.cost == 0.0) {
            best.converged = true;
            best.message = "zero gradient";
            return best;
        }

        bool accepted = false;
        for (int attempt = 0; attempt < 60 && !accepted; ++attempt) {
            Eigen::MatrixXd system = jtj;
            for (Eigen::Index i = 0; i < n; ++i)
                system(i, i) += damping * std::max(jtj(i, i), 1e-300);
            const Eigen::VectorXd step = system.ldlt().solve(-gradient);
            const Eigen::VectorXd trial = project(best.params + step, lower, upper);
            model(trial, trial_residuals, nullptr);
            const double trial_cost = 0.5 * trial_residuals.squaredNorm();

            if (std::isfinite(trial_cost) && trial_cost <= best.cost) {
                const double change = (trial - best.params).norm();
                const double scale = best.params.norm() + std::numeric_limits<double>::min();
                const double cost_drop = best.cost - trial_cost;
                best.params = trial;
                model(best.params, best.residuals, &best.jacobian);
                best.cost = 0.5 * best.residuals.squaredNorm();
                damping = std::max(damping / 3.0, 1e-15);
                accepted = true;
                if (change <= options.step_tolerance * scale ||
                    cost_drop <= options.cost_tolerance * best.cost) {
                    best.converged = true;
                    best.message = "converged";
                    return best;
                }
            } else {
                damping *= 4.0;
            }
        }
        if (!accepted) {
            // No descent at any damping: we sit at a (possibly bound-constrained) minimum.
            best.converged = true;
            best.message = "no further descent";
            return best;
        }
    }
    best.message = "maximum iterations reached";
    return best;
}

Eigen::MatrixXd covariance(const Result& result, double* condition) {
    const Eigen::Index m = result.residuals.size();
    const Eigen::Index n = result.params.size();
    const Eigen::MatrixXd jtj = result.jacobian.transpose() * result.jacobian;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jtj);
    const Eigen::VectorXd values = eig.eigenvalues();
    const double largest = values.maxCoeff();
    const double smallest = std::max(values.minCoeff(), 0.0);
    if (condition) *condition = smallest > 0.0 ? largest / smallest : std::numeric_limits<double>::infinity();

    const double sigma2 = m > n ? result.residuals.squaredNorm() / static_cast<double>(m - n) : 0.0;
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i)
        if (values(i) > largest * 1e-14) inv(i) = 1.0 / values(i);
    return sigma2 * eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace numsplit::lsq
