#ifndef ITRP_OBJECTIVE_HPP
#define ITRP_OBJECTIVE_HPP

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "itrp/model.hpp"
#include "itrp/simulate.hpp"

namespace itrp {

// Quadratic pull towards the sphere of radius R around a reference estimate.
// With the default strength 1/R^2 the penalty value lies in [0,1] inside the
// sphere and vanishes exactly on it.
struct RadialPenalty {
    Eigen::VectorXd reference;  // free parameters, estimation scale
    double radius = 1.0;
    double lambda = 1.0;       // default 1/R^2, see make_radial_penalty
    std::vector<int> subset;   // free-vector positions inside the norm

    static RadialPenalty around(const Eigen::VectorXd& reference, double radius,
                                std::optional<double> lambda_override = std::nullopt,
                                std::vector<int> subset = {});
};

enum class ErrorTermMode {
    Auto,       // include -2logL log term when sigma varies with theta
    LogTerm,    // include it for every expression-based sigma
    PlainChi2,  // never
};

struct ObjectiveSpec {
    const Dataset* data = nullptr;
    std::optional<RadialPenalty> penalty;
    ErrorTermMode error_mode = ErrorTermMode::Auto;
    bool include_priors = true;
    IntegratorConfig integrator;
};

// Residual vector and Jacobian: data rows, then prior rows, then (optionally)
// the penalty row. log_term carries the non-residual -2logL part.
struct ResidualEval {
    Eigen::VectorXd res;
    Eigen::MatrixXd jac;
    int n_data_rows = 0;
    int n_prior_rows = 0;
    int n_penalty_rows = 0;
    double log_term = 0.0;
    Eigen::VectorXd log_term_grad;
};

struct ObjectiveParts {
    double v_data = 0.0;  // data + priors + log term
    double v_pen = 0.0;
    double v_total = 0.0;
};

ResidualEval residuals(const ObjectiveSpec& spec, const DynamicModel& model,
                       const Eigen::VectorXd& theta);

std::pair<double, Eigen::VectorXd> value_and_gradient(const ObjectiveSpec& spec,
                                                      const DynamicModel& model,
                                                      const Eigen::VectorXd& theta);

double objective_value(const ObjectiveSpec& spec, const DynamicModel& model,
                       const Eigen::VectorXd& theta);

ObjectiveParts objective_parts(const ObjectiveSpec& spec, const DynamicModel& model,
                               const Eigen::VectorXd& theta);

// 2 J^T J over all residual rows, penalty included.
Eigen::MatrixXd gauss_newton_hessian(const ObjectiveSpec& spec, const DynamicModel& model,
                                     const Eigen::VectorXd& theta);

// Derived quantities computed from ResidualEval (cheap, no re-simulation).
double value_from(const ResidualEval& r);
Eigen::VectorXd gradient_from(const ResidualEval& r);
Eigen::MatrixXd gauss_newton_hessian(const ResidualEval& r);

}  // namespace itrp

#endif
