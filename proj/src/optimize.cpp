#include "itrp/optimize.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "itrp/errors.hpp"
#include "itrp/rng.hpp"

namespace itrp {

namespace {

Eigen::VectorXd clamp_to_box(const Eigen::VectorXd& x, const Eigen::VectorXd& lb,
                             const Eigen::VectorXd& ub) {
    return x.cwiseMax(lb).cwiseMin(ub);
}

// Components pushing out of an active bound cannot be reduced further, so they
// are excluded from the convergence test.
double projected_grad_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& grad,
                           const Eigen::VectorXd& lb, const Eigen::VectorXd& ub) {
    double norm = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        if (x[j] <= lb[j] && grad[j] > 0.0) continue;
        if (x[j] >= ub[j] && grad[j] < 0.0) continue;
        norm = std::max(norm, std::abs(grad[j]));
    }
    return norm;
}

}  // namespace

std::string to_string(StopReason r) {
    switch (r) {
        case StopReason::SmallDecrease: return "small_decrease";
        case StopReason::SmallGradient: return "small_gradient";
        case StopReason::MaxIterations: return "max_iterations";
        case StopReason::Stalled: return "stalled";
    }
    return "unknown";
}

FitResult minimize(const DynamicModel& model, const ObjectiveSpec& spec,
                   const Eigen::VectorXd& theta0, const OptimizerConfig& config) {
    const Eigen::VectorXd lb = model.space().lower_free();
    const Eigen::VectorXd ub = model.space().upper_free();

    FitResult out;
    out.theta = clamp_to_box(theta0, lb, ub);

    ResidualEval ev;
    try {
        ev = residuals(spec, model, out.theta);
        ++out.n_residual_evals;
    } catch (const IntegrationError&) {
        out.value = std::numeric_limits<double>::infinity();
        out.feasible = false;
        return out;
    }

    double value = value_from(ev);
    Eigen::VectorXd grad = gradient_from(ev);

    if (projected_grad_norm(out.theta, grad, lb, ub) < config.grad_tol) {
        out.value = value;
        out.stop = StopReason::SmallGradient;
        return out;
    }

    // Levenberg-Marquardt on the normal equations, mu scaled per Nielsen.
    Eigen::MatrixXd hess = gauss_newton_hessian(ev);
    double mu = config.init_damping * std::max(hess.diagonal().maxCoeff(), 1e-12);
    double nu = 2.0;
    const double mu_cap = 1e14;

    while (out.iterations < config.max_iter) {
        ++out.iterations;

        Eigen::MatrixXd damped = hess;
        damped.diagonal().array() += mu;
        Eigen::VectorXd step = Eigen::LDLT<Eigen::MatrixXd>(damped).solve(-grad);

        bool rejected = false;
        double trial_value = 0.0;
        ResidualEval trial_ev;
        Eigen::VectorXd trial;
        if (!step.allFinite()) {
            rejected = true;
        } else {
            trial = clamp_to_box(out.theta + step, lb, ub);
            try {
                trial_ev = residuals(spec, model, trial);
                ++out.n_residual_evals;
                trial_value = value_from(trial_ev);
                rejected = !(trial_value < value);
            } catch (const IntegrationError&) {
                rejected = true;
            }
        }

        if (rejected) {
            mu *= nu;
            nu *= 2.0;
            if (mu > mu_cap) {
                out.stop = StopReason::Stalled;
                break;
            }
            continue;
        }

        const Eigen::VectorXd taken = trial - out.theta;
        const double predicted = -grad.dot(taken) - 0.5 * taken.dot(hess * taken);
        const double actual = value - trial_value;
        if (predicted > 0.0) {
            const double rho = actual / predicted;
            mu *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
        } else {
            mu /= 3.0;
        }
        nu = 2.0;

        out.theta = trial;
        value = trial_value;
        ev = std::move(trial_ev);
        grad = gradient_from(ev);
        hess = gauss_newton_hessian(ev);

        if (actual < config.tol_fun) {
            out.stop = StopReason::SmallDecrease;
            break;
        }
        if (projected_grad_norm(out.theta, grad, lb, ub) < config.grad_tol) {
            out.stop = StopReason::SmallGradient;
            break;
        }
    }

    out.value = value;
    return out;
}

MultistartResult multistart(const DynamicModel& model, const ObjectiveSpec& spec,
                            const Eigen::VectorXd& theta0, const OptimizerConfig& config) {
    const Eigen::VectorXd lb = model.space().lower_free();
    const Eigen::VectorXd ub = model.space().upper_free();
    const int n_starts = std::max(1, config.n_starts);

    MultistartResult out;
    out.starts.resize(static_cast<std::size_t>(n_starts));

    Rng rng(config.seed);
    for (int i = 0; i < n_starts; ++i) {
        auto& rec = out.starts[static_cast<std::size_t>(i)];
        rec.index = i;
        if (i == 0) {
            rec.start = clamp_to_box(theta0, lb, ub);
        } else {
            rec.start.resize(lb.size());
            for (Eigen::Index j = 0; j < lb.size(); ++j)
                rec.start[j] = rng.uniform(lb[j], ub[j]);
        }
    }

    const int jobs = std::clamp(config.jobs, 1, n_starts);
    if (jobs == 1) {
        for (auto& rec : out.starts) rec.fit = minimize(model, spec, rec.start, config);
    } else {
        std::atomic<int> next{0};
        auto worker = [&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n_starts) return;
                auto& rec = out.starts[static_cast<std::size_t>(i)];
                rec.fit = minimize(model, spec, rec.start, config);
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(jobs));
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    int best = -1;
    for (int i = 0; i < n_starts; ++i) {
        const auto& fit = out.starts[static_cast<std::size_t>(i)].fit;
        if (!fit.feasible) continue;
        if (best < 0 || fit.value < out.starts[static_cast<std::size_t>(best)].fit.value)
            best = i;
    }
    if (best < 0) throw OptimizationError("all starts failed to integrate");

    out.best_index = best;
    out.best = out.starts[static_cast<std::size_t>(best)].fit;
    return out;
}

}  // namespace itrp
