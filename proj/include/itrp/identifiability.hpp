#ifndef ITRP_IDENTIFIABILITY_HPP
#define ITRP_IDENTIFIABILITY_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "itrp/model.hpp"
#include "itrp/objective.hpp"
#include "itrp/optimize.hpp"
#include "itrp/simulate.hpp"

namespace itrp {

enum class Verdict { Identifiable, NonIdentifiable, SuspectStart };

std::string to_string(Verdict v);

// delta_v >= delta: identifiable. delta_v < -delta: the start was not an
// optimum. In between: non-identifiable.
Verdict classify(double delta_v, double delta);

struct ItrpConfig {
    double radius = 1.0;
    std::optional<double> lambda;      // defaults to 1/radius^2
    double delta = 1e-3;
    std::vector<std::string> subset;   // penalty subset; empty means all free
    ErrorTermMode error_mode = ErrorTermMode::Auto;
    OptimizerConfig opt;
    IntegratorConfig integrator;
};

struct FitSummary {
    Eigen::VectorXd theta_hat;  // estimation scale
    double v_data = 0.0;
    MultistartResult starts;
};

// Multistart fit of the data objective (no penalty).
FitSummary fit_data(const DynamicModel& model, const Dataset& data,
                    const Eigen::VectorXd& theta0, const ItrpConfig& config);

struct ItrpReport {
    double v_data_hat = 0.0;
    double min_v_tot = 0.0;
    double delta_v = 0.0;
    Verdict verdict = Verdict::Identifiable;
    Eigen::VectorXd theta_hat;
    Eigen::VectorXd theta_star;
    double v_data_star = 0.0;
    double v_pen_star = 0.0;
    int least_index = -1;      // free-parameter position of the largest move
    std::string least_name;
    std::vector<int> subset;   // resolved free positions the penalty acted on
    MultistartResult starts;
};

// The test itself: penalize the distance from theta_hat, refit, and read the
// verdict off the objective increase. config.subset restricts the penalty
// norm; every parameter stays free in the refit either way.
ItrpReport itrp(const DynamicModel& model, const Dataset& data,
                const Eigen::VectorXd& theta_hat, const ItrpConfig& config);

struct IterationStep {
    std::string fixed_name;
    double fixed_value = 0.0;          // estimation scale
    Eigen::VectorXd theta_hat;         // refit optimum of the reduced model
    std::optional<ItrpReport> report;  // absent only if no parameter remains free
};

struct IterationTrail {
    ItrpReport initial;
    std::vector<IterationStep> steps;
    // The model with all fixes applied, for follow-up profiles.
    std::optional<DynamicModel> final_model;
};

// Repeat itrp, fixing the least identifiable parameter at its current
// estimate after each non-identifiable verdict and refitting the rest. The
// trail length counts the parameters that had to be fixed.
IterationTrail iterate(const DynamicModel& model, const Dataset& data,
                       const Eigen::VectorXd& theta_hat, const ItrpConfig& config);

struct RadialProfile {
    double v_data_hat = 0.0;
    std::vector<double> radii;
    std::vector<double> v_tot;
    std::vector<double> delta_v;
    std::vector<Eigen::VectorXd> theta_star;  // parameter path, estimation scale
};

// Penalized fits over an increasing radius grid, each warm-started from the
// previous optimum. The penalty reference stays at theta_hat throughout.
RadialProfile radial_profile(const DynamicModel& model, const Dataset& data,
                             const Eigen::VectorXd& theta_hat,
                             const std::vector<double>& r_grid, const ItrpConfig& config);

double math_mode_sigma(double x, const IntegratorConfig& config, int n_sim);

// Noise-free synthetic dataset: n_sim points per (observable, condition) pair
// of `data`, uniform over the dataset's time span, simulated at theta and
// weighted by math_mode_sigma. Fitting it back at theta gives exactly zero
// data residuals, so the verdict probes the model structure alone.
Dataset math_mode_dataset(const DynamicModel& model, const Eigen::VectorXd& theta,
                          const Dataset& data, int n_sim, const IntegratorConfig& config);

struct ProfilePoint {
    double p = 0.0;          // value of the profiled parameter, estimation scale
    double value = 0.0;      // reoptimized data objective
    Eigen::VectorXd theta;   // full free vector of the original model
};

struct ProfileCurve {
    std::string parameter;
    std::vector<ProfilePoint> points;  // ascending in p
    int center_index = -1;             // grid point at theta_hat
};

struct ProfileGridPolicy {
    double half_width = 2.0;  // estimation scale
    int n_points = 41;
};

// Reference oracle: step one parameter over a grid and reoptimize the rest,
// warm-starting outward from the center. Grid points outside the parameter's
// bounds are dropped.
ProfileCurve profile_likelihood(const DynamicModel& model, const Dataset& data,
                                const Eigen::VectorXd& theta_hat, const std::string& name,
                                const ProfileGridPolicy& policy, const ItrpConfig& config);

double pl_span(const ProfileCurve& curve);        // max - min over the grid
double pl_rise_left(const ProfileCurve& curve);   // max left of center, minus center
double pl_rise_right(const ProfileCurve& curve);  // max right of center, minus center
bool pl_flat(const ProfileCurve& curve, double delta);
bool pl_rises_one_side(const ProfileCurve& curve, double delta);
bool pl_rises_both_sides(const ProfileCurve& curve, double delta);
bool pl_interior_minimum(const ProfileCurve& curve);

}  // namespace itrp

#endif
