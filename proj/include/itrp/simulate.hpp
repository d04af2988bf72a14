#ifndef ITRP_SIMULATE_HPP
#define ITRP_SIMULATE_HPP

#include <Eigen/Core>
#include <span>
#include <vector>

#include "itrp/model.hpp"

namespace itrp {

struct IntegratorConfig {
    double atol = 1e-8;
    double rtol = 1e-8;
    long max_steps = 100000;
    double initial_step = 0.0;  // 0 = choose automatically
};

// States and estimation-scale sensitivities S = dx/dtheta at the requested
// times of one condition.
struct Trajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;      // n_x per time
    std::vector<Eigen::MatrixXd> sensitivities;  // n_x x n_free per time
};

// Dormand-Prince 5(4) with dense output over the augmented state+sensitivity
// system. theta is the free-parameter vector on the estimation scale.
// Throws IntegrationError on step-count overflow or non-finite values.
Trajectory integrate(const DynamicModel& model, const Eigen::VectorXd& theta,
                     const Condition& condition, std::span<const double> times,
                     const IntegratorConfig& config);

// Per-datapoint observation values, noise levels and their estimation-scale
// parameter derivatives.
struct Predictions {
    Eigen::VectorXd g;
    Eigen::MatrixXd dg;      // n_data x n_free
    Eigen::VectorXd sigma;   // from the error model or the data row
    Eigen::MatrixXd dsigma;  // zero rows where sigma is theta-independent
    std::vector<bool> sigma_from_data;
};

Predictions predict(const DynamicModel& model, const Eigen::VectorXd& theta, const Dataset& data,
                    const IntegratorConfig& config);

}  // namespace itrp

#endif
