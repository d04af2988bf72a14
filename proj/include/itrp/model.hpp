#ifndef ITRP_MODEL_HPP
#define ITRP_MODEL_HPP

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "itrp/expr.hpp"

namespace itrp {

struct GaussianPrior {
    double mean = 0.0;  // estimation scale
    double sd = 1.0;
};

struct Parameter {
    std::string name;
    bool log10_scale = true;
    double lower = -5.0;  // estimation scale
    double upper = 3.0;
    bool fixed = false;
    double value = 0.0;  // reference / fixed value, estimation scale
    std::optional<GaussianPrior> prior;
};

// All model parameters with their transforms. The optimization vector holds
// the free parameters in declaration order, on the estimation scale.
class ParameterSpace {
  public:
    void add(Parameter p);

    int size() const { return static_cast<int>(params_.size()); }
    int n_free() const { return static_cast<int>(free_.size()); }
    const Parameter& param(int i) const { return params_[static_cast<std::size_t>(i)]; }
    const std::vector<Parameter>& params() const { return params_; }

    int index_of(const std::string& name) const;  // -1 if unknown
    // Position of parameter i in the free vector, -1 if fixed.
    int free_position(int param_index) const;
    int free_param_index(int free_position) const { return free_[static_cast<std::size_t>(free_position)]; }
    const std::string& free_name(int free_position) const;

    Eigen::VectorXd reference_free() const;  // declared values, estimation scale
    Eigen::VectorXd lower_free() const;
    Eigen::VectorXd upper_free() const;

    // Elementwise 10^x for log10-scaled entries, identity otherwise.
    Eigen::VectorXd to_natural(const Eigen::VectorXd& free_est) const;
    Eigen::VectorXd from_natural(const Eigen::VectorXd& free_nat) const;
    // Natural-scale values of all parameters (fixed ones included).
    Eigen::VectorXd natural_full(const Eigen::VectorXd& free_est) const;
    // d(nat)/d(est) for free parameter j at the given point: ln(10)*nat or 1.
    double scale_factor(int free_position, double nat_value) const;

    void fix(const std::string& name, double est_value);
    void validate() const;

  private:
    std::vector<Parameter> params_;
    std::vector<int> free_;
};

struct StateDef {
    std::string name;
    ExprPtr init;  // over parameters only
    int symbol = -1;
};

struct ObservableDef {
    std::string id;
    ExprPtr g;
    ExprPtr error;  // null when sigma comes from the data file
    bool sigma_from_data = false;
    bool error_theta_dependent = false;
};

struct Condition {
    std::string id;
    std::vector<double> inputs;  // parallel to DynamicModel::input_names()
};

// Symbolic derivatives shared by every integration of one model.
// Parameter derivatives are w.r.t. the natural scale; the log10 chain rule
// factor is applied at evaluation time.
struct CompiledDerivs {
    std::vector<std::vector<ExprPtr>> dfdx;   // n_x x n_x
    std::vector<std::vector<ExprPtr>> dfdp;   // n_x x n_free
    std::vector<std::vector<ExprPtr>> dx0dp;  // n_x x n_free
    std::vector<std::vector<ExprPtr>> dgdx;   // n_obs x n_x
    std::vector<std::vector<ExprPtr>> dgdp;   // n_obs x n_free
    std::vector<std::vector<ExprPtr>> dedx;   // empty row when sigma_from_data
    std::vector<std::vector<ExprPtr>> dedp;
};

struct PositiveControlTransform {
    std::string target;
    std::string factor_a;
    std::string factor_b;
};

// Complete estimation problem: dynamics, observation map, parameter space.
// Immutable after construction; reparametrizations return a new model.
class DynamicModel {
  public:
    DynamicModel() = default;

    const std::string& name() const { return name_; }
    const ParameterSpace& space() const { return space_; }
    const SymbolTable& symbols() const { return symbols_; }
    const std::vector<StateDef>& states() const { return states_; }
    const std::vector<ExprPtr>& rates() const { return rates_; }
    const std::vector<ObservableDef>& observables() const { return observables_; }
    const std::vector<Condition>& conditions() const { return conditions_; }
    const std::vector<std::string>& input_names() const { return input_names_; }
    const CompiledDerivs& derivs() const { return derivs_; }

    int n_states() const { return static_cast<int>(states_.size()); }
    int observable_index(const std::string& id) const;
    int condition_index(const std::string& id) const;

    // Evaluation environment layout: [states | parameters(nat) | inputs | t].
    std::vector<double> make_env(const Eigen::VectorXd& theta_nat_full,
                                 const Condition& condition) const;
    int time_symbol() const { return time_symbol_; }
    int state_symbol(int i) const { return states_[static_cast<std::size_t>(i)].symbol; }
    int param_symbol(int i) const { return param_symbol_base_ + i; }

    Eigen::VectorXd initial_state(std::vector<double>& env) const;

    DynamicModel with_fixed(const std::string& name, double est_value) const;

    // Drop every observable's error model in favor of per-row sigma values.
    DynamicModel with_sigma_from_data() const;

    // Replace `target` everywhere by the product of two fresh parameters,
    // injecting a known non-identifiability.
    DynamicModel apply_positive_control(const PositiveControlTransform& t) const;

    friend DynamicModel load_model(const std::string& path);
    friend DynamicModel model_from_json_text(const std::string& text, const std::string& origin);

  private:
    void compile();

    std::string name_;
    ParameterSpace space_;
    SymbolTable symbols_;
    std::vector<StateDef> states_;
    std::vector<ExprPtr> rates_;
    std::vector<ObservableDef> observables_;
    std::vector<Condition> conditions_;
    std::vector<std::string> input_names_;
    CompiledDerivs derivs_;
    int param_symbol_base_ = 0;
    int input_symbol_base_ = 0;
    int time_symbol_ = 0;
};

struct DataPoint {
    std::string observable;
    std::string condition;
    double time = 0.0;
    double value = 0.0;
    std::optional<double> sigma;
    int observable_idx = -1;
    int condition_idx = -1;
};

class Dataset {
  public:
    explicit Dataset(std::vector<DataPoint> points) : points_(std::move(points)) {}
    Dataset() = default;

    const std::vector<DataPoint>& points() const { return points_; }
    int size() const { return static_cast<int>(points_.size()); }
    std::pair<double, double> time_span() const;

  private:
    std::vector<DataPoint> points_;
};

DynamicModel load_model(const std::string& path);
DynamicModel model_from_json_text(const std::string& text, const std::string& origin);

// CSV with header observable,condition,time,value,sigma (sigma optional per
// row). Rows are validated against the model.
Dataset load_data(const std::string& path, const DynamicModel& model);
Dataset data_from_csv_text(const std::string& text, const DynamicModel& model,
                           const std::string& origin);
void write_data_csv(const std::string& path, const Dataset& data);

}  // namespace itrp

#endif
