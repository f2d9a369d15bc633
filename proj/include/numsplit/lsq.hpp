// lsq.hpp - bound-constrained damped least squares (Levenberg-Marquardt)

#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

namespace numsplit::lsq {

// Fills residuals r(p) and, when jacobian is non-null, dr/dp.
using Model = std::function<void(const Eigen::VectorXd& params, Eigen::VectorXd& residuals,
                                 Eigen::MatrixXd* jacobian)>;

struct Options {
    int max_iterations{500};
    double step_tolerance{1e-13};  // relative parameter change
    double cost_tolerance{1e-16};  // relative cost change
    double initial_damping{1e-3};
};

struct Result {
    Eigen::VectorXd params;
    Eigen::VectorXd residuals;
    Eigen::MatrixXd jacobian;
    double cost{0.0};  // 0.5 * |r|^2
    int iterations{0};
    bool converged{false};
    std::string message;
};

// Minimizes 0.5 |r(p)|^2 with lower <= p <= upper (projection after every step).
Result minimize(const Model& model, Eigen::VectorXd initial, const Eigen::VectorXd& lower,
                const Eigen::VectorXd& upper, const Options& options = {});

// sigma^2 (J^T J)^+ with sigma^2 = |r|^2 / (m - n); also reports the
// condition number of J^T J.
Eigen::MatrixXd covariance(const Result& result, double* condition = nullptr);

}  // namespace numsplit::lsq
