#ifndef ITRP_OPTIMIZE_HPP
#define ITRP_OPTIMIZE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "itrp/model.hpp"
#include "itrp/objective.hpp"

namespace itrp {

struct OptimizerConfig {
    double tol_fun = 1e-6;   // stop when an accepted step improves by less
    double grad_tol = 1e-8;  // stop when the gradient inf-norm falls below
    int max_iter = 1000;
    double init_damping = 1e-3;
    int n_starts = 5;
    std::uint64_t seed = 0;
    int jobs = 1;
};

enum class StopReason { SmallDecrease, SmallGradient, MaxIterations, Stalled };

std::string to_string(StopReason r);

// One local fit.
struct FitResult {
    Eigen::VectorXd theta;  // estimation scale
    double value = 0.0;
    int iterations = 0;
    int n_residual_evals = 0;
    StopReason stop = StopReason::MaxIterations;
    bool feasible = true;  // false when every iterate failed to integrate
};

struct StartRecord {
    int index = 0;
    Eigen::VectorXd start;
    FitResult fit;
};

struct MultistartResult {
    FitResult best;
    int best_index = 0;
    std::vector<StartRecord> starts;
};

// Levenberg-Marquardt with box projection. Bounds come from the model's free
// parameters; theta0 is clamped into the box before the first evaluation.
FitResult minimize(const DynamicModel& model, const ObjectiveSpec& spec,
                   const Eigen::VectorXd& theta0, const OptimizerConfig& config);

// starts[0] is theta0; the rest are drawn uniformly inside the bound box from
// config.seed. Ties on the final value resolve to the lowest start index, so
// the result does not depend on config.jobs.
MultistartResult multistart(const DynamicModel& model, const ObjectiveSpec& spec,
                            const Eigen::VectorXd& theta0, const OptimizerConfig& config);

}  // namespace itrp

#endif
