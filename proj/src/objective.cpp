#include "itrp/objective.hpp"

#include <cmath>

namespace itrp {

RadialPenalty RadialPenalty::around(const Eigen::VectorXd& reference, double radius,
                                    std::optional<double> lambda_override,
                                    std::vector<int> subset) {
    if (!(radius > 0.0)) throw Error("radial penalty: radius must be positive");
    RadialPenalty p;
    p.reference = reference;
    p.radius = radius;
    p.lambda = lambda_override ? *lambda_override : 1.0 / (radius * radius);
    if (subset.empty()) {
        p.subset.resize(static_cast<std::size_t>(reference.size()));
        for (int j = 0; j < reference.size(); ++j) p.subset[static_cast<std::size_t>(j)] = j;
    } else {
        p.subset = std::move(subset);
    }
    return p;
}

ResidualEval residuals(const ObjectiveSpec& spec, const DynamicModel& model,
                       const Eigen::VectorXd& theta) {
    if (!spec.data) throw Error("objective: no dataset attached");
    const int np = model.space().n_free();
    const int nd = spec.data->size();

    std::vector<int> prior_rows;
    if (spec.include_priors) {
        for (int j = 0; j < np; ++j)
            if (model.space().param(model.space().free_param_index(j)).prior) prior_rows.push_back(j);
    }
    const int n_prior = static_cast<int>(prior_rows.size());
    const int n_pen = spec.penalty ? 1 : 0;

    ResidualEval out;
    out.n_data_rows = nd;
    out.n_prior_rows = n_prior;
    out.n_penalty_rows = n_pen;
    out.res.resize(nd + n_prior + n_pen);
    out.jac = Eigen::MatrixXd::Zero(nd + n_prior + n_pen, np);
    out.log_term_grad = Eigen::VectorXd::Zero(np);

    Predictions pred = predict(model, theta, *spec.data, spec.integrator);
    for (int i = 0; i < nd; ++i) {
        const DataPoint& p = spec.data->points()[static_cast<std::size_t>(i)];
        const double sig = pred.sigma[i];
        const double r = (p.value - pred.g[i]) / sig;
        out.res[i] = r;
        // d/dtheta (y-g)/sigma = -g'/sigma - (y-g) sigma'/sigma^2
        out.jac.row(i) = -pred.dg.row(i) / sig;
        if (!pred.sigma_from_data[static_cast<std::size_t>(i)]) {
            out.jac.row(i) -= (r / sig) * pred.dsigma.row(i);
            const auto& obs = model.observables()[static_cast<std::size_t>(p.observable_idx)];
            const bool want_log = spec.error_mode == ErrorTermMode::LogTerm ||
                                  (spec.error_mode == ErrorTermMode::Auto && obs.error_theta_dependent);
            if (want_log) {
                out.log_term += 2.0 * std::log(sig);
                out.log_term_grad += (2.0 / sig) * pred.dsigma.row(i).transpose();
            }
        }
    }

    for (int k = 0; k < n_prior; ++k) {
        const int j = prior_rows[static_cast<std::size_t>(k)];
        const GaussianPrior& pr = *model.space().param(model.space().free_param_index(j)).prior;
        out.res[nd + k] = (theta[j] - pr.mean) / pr.sd;
        out.jac(nd + k, j) = 1.0 / pr.sd;
    }

    if (spec.penalty) {
        const RadialPenalty& pen = *spec.penalty;
        if (pen.reference.size() != np) throw Error("radial penalty: reference size mismatch");
        const double sqrt_lambda = std::sqrt(pen.lambda);
        double dist2 = 0.0;
        for (int j : pen.subset) {
            const double d = theta[j] - pen.reference[j];
            dist2 += d * d;
        }
        const double dist = std::sqrt(dist2);
        const int row = nd + n_prior;
        out.res[row] = sqrt_lambda * (dist - pen.radius);
        if (dist > 0.0) {
            for (int j : pen.subset)
                out.jac(row, j) = sqrt_lambda * (theta[j] - pen.reference[j]) / dist;
        } else {
            // The norm is not differentiable at the reference point. Any
            // direction is a valid descent direction there; pick the first
            // subset coordinate so optimization can leave the point.
            out.jac(row, pen.subset.front()) = sqrt_lambda;
        }
    }
    return out;
}

double value_from(const ResidualEval& r) { return r.res.squaredNorm() + r.log_term; }

Eigen::VectorXd gradient_from(const ResidualEval& r) {
    return 2.0 * r.jac.transpose() * r.res + r.log_term_grad;
}

std::pair<double, Eigen::VectorXd> value_and_gradient(const ObjectiveSpec& spec,
                                                      const DynamicModel& model,
                                                      const Eigen::VectorXd& theta) {
    ResidualEval r = residuals(spec, model, theta);
    return {value_from(r), gradient_from(r)};
}

double objective_value(const ObjectiveSpec& spec, const DynamicModel& model,
                       const Eigen::VectorXd& theta) {
    return value_from(residuals(spec, model, theta));
}

ObjectiveParts objective_parts(const ObjectiveSpec& spec, const DynamicModel& model,
                               const Eigen::VectorXd& theta) {
    ResidualEval r = residuals(spec, model, theta);
    ObjectiveParts parts;
    const int n_data_like = r.n_data_rows + r.n_prior_rows;
    parts.v_data = r.res.head(n_data_like).squaredNorm() + r.log_term;
    parts.v_pen = r.n_penalty_rows ? r.res.tail(1).squaredNorm() : 0.0;
    parts.v_total = parts.v_data + parts.v_pen;
    return parts;
}

Eigen::MatrixXd gauss_newton_hessian(const ResidualEval& r) {
    return 2.0 * r.jac.transpose() * r.jac;
}

Eigen::MatrixXd gauss_newton_hessian(const ObjectiveSpec& spec, const DynamicModel& model,
                                     const Eigen::VectorXd& theta) {
    return gauss_newton_hessian(residuals(spec, model, theta));
}

}  // namespace itrp
