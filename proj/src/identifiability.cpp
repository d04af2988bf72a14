#include "itrp/identifiability.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "itrp/errors.hpp"

namespace itrp {

namespace {

std::vector<int> resolve_subset(const DynamicModel& model, const std::vector<std::string>& names) {
    const auto& space = model.space();
    std::vector<int> subset;
    if (names.empty()) {
        subset.resize(static_cast<std::size_t>(space.n_free()));
        for (int j = 0; j < space.n_free(); ++j) subset[static_cast<std::size_t>(j)] = j;
        return subset;
    }
    for (const auto& name : names) {
        const int idx = space.index_of(name);
        if (idx < 0) throw Error("unknown subset parameter: " + name);
        if (space.param(idx).fixed)
            throw Error("subset parameter is fixed: " + name);
        subset.push_back(space.free_position(idx));
    }
    std::sort(subset.begin(), subset.end());
    subset.erase(std::unique(subset.begin(), subset.end()), subset.end());
    return subset;
}

ObjectiveSpec plain_spec(const Dataset& data, const ItrpConfig& config) {
    ObjectiveSpec spec;
    spec.data = &data;
    spec.error_mode = config.error_mode;
    spec.integrator = config.integrator;
    return spec;
}

// Map a free vector of `from` onto the free parameters of `to` by name.
// Parameters of `to` missing in `from` keep their declared values.
Eigen::VectorXd remap_free(const DynamicModel& from, const Eigen::VectorXd& theta_from,
                           const DynamicModel& to) {
    Eigen::VectorXd out = to.space().reference_free();
    for (int j = 0; j < to.space().n_free(); ++j) {
        const std::string& name = to.space().free_name(j);
        const int idx = from.space().index_of(name);
        if (!from.space().param(idx).fixed)
            out[j] = theta_from[from.space().free_position(idx)];
    }
    return out;
}

}  // namespace

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Identifiable: return "identifiable";
        case Verdict::NonIdentifiable: return "non-identifiable";
        case Verdict::SuspectStart: return "suspect-start";
    }
    return "unknown";
}

Verdict classify(double delta_v, double delta) {
    if (delta_v < -delta) return Verdict::SuspectStart;
    if (delta_v < delta) return Verdict::NonIdentifiable;
    return Verdict::Identifiable;
}

FitSummary fit_data(const DynamicModel& model, const Dataset& data,
                    const Eigen::VectorXd& theta0, const ItrpConfig& config) {
    const ObjectiveSpec spec = plain_spec(data, config);
    FitSummary out;
    out.starts = multistart(model, spec, theta0, config.opt);
    out.theta_hat = out.starts.best.theta;
    out.v_data = out.starts.best.value;
    return out;
}

ItrpReport itrp(const DynamicModel& model, const Dataset& data,
                const Eigen::VectorXd& theta_hat, const ItrpConfig& config) {
    if (config.radius <= 0.0) throw Error("radius must be positive");
    if (config.delta <= 0.0) throw Error("delta must be positive");
    if (model.space().n_free() == 0) throw Error("no free parameters to test");

    const std::vector<int> subset = resolve_subset(model, config.subset);
    const ObjectiveSpec plain = plain_spec(data, config);

    ItrpReport rep;
    rep.subset = subset;
    rep.theta_hat = theta_hat;
    rep.v_data_hat = objective_value(plain, model, theta_hat);

    ObjectiveSpec penalized = plain;
    penalized.penalty = RadialPenalty::around(theta_hat, config.radius, config.lambda, subset);
    rep.starts = multistart(model, penalized, theta_hat, config.opt);

    rep.min_v_tot = rep.starts.best.value;
    rep.delta_v = rep.min_v_tot - rep.v_data_hat;
    rep.verdict = classify(rep.delta_v, config.delta);
    rep.theta_star = rep.starts.best.theta;

    const ObjectiveParts parts = objective_parts(penalized, model, rep.theta_star);
    rep.v_data_star = parts.v_data;
    rep.v_pen_star = parts.v_pen;

    double largest = -1.0;
    for (const int pos : subset) {
        const double move = std::abs(rep.theta_star[pos] - theta_hat[pos]);
        if (move > largest) {
            largest = move;
            rep.least_index = pos;
        }
    }
    rep.least_name = model.space().free_name(rep.least_index);
    return rep;
}

IterationTrail iterate(const DynamicModel& model, const Dataset& data,
                       const Eigen::VectorXd& theta_hat, const ItrpConfig& config) {
    IterationTrail trail;
    trail.initial = itrp(model, data, theta_hat, config);

    DynamicModel current = model;
    Eigen::VectorXd th = theta_hat;
    ItrpConfig cfg = config;
    const ItrpReport* rep = &trail.initial;

    while (rep->verdict == Verdict::NonIdentifiable) {
        IterationStep step;
        step.fixed_name = rep->least_name;
        step.fixed_value = th[rep->least_index];

        DynamicModel reduced = current.with_fixed(step.fixed_name, step.fixed_value);
        if (!cfg.subset.empty()) {
            std::erase(cfg.subset, step.fixed_name);
            if (cfg.subset.empty()) {
                // The requested subset is exhausted; nothing left to test.
                trail.steps.push_back(std::move(step));
                current = std::move(reduced);
                break;
            }
        }
        if (reduced.space().n_free() == 0) {
            trail.steps.push_back(std::move(step));
            current = std::move(reduced);
            break;
        }

        const Eigen::VectorXd th0 = remap_free(current, th, reduced);
        const FitSummary refit = fit_data(reduced, data, th0, cfg);
        step.theta_hat = refit.theta_hat;
        step.report = itrp(reduced, data, refit.theta_hat, cfg);

        th = refit.theta_hat;
        current = std::move(reduced);
        trail.steps.push_back(std::move(step));
        rep = &*trail.steps.back().report;
    }

    trail.final_model = std::move(current);
    return trail;
}

RadialProfile radial_profile(const DynamicModel& model, const Dataset& data,
                             const Eigen::VectorXd& theta_hat,
                             const std::vector<double>& r_grid, const ItrpConfig& config) {
    if (r_grid.empty()) throw Error("radius grid is empty");
    for (std::size_t i = 0; i < r_grid.size(); ++i) {
        if (r_grid[i] <= 0.0) throw Error("radius grid must be positive");
        if (i > 0 && r_grid[i] <= r_grid[i - 1]) throw Error("radius grid must be increasing");
    }

    const std::vector<int> subset = resolve_subset(model, config.subset);
    const ObjectiveSpec plain = plain_spec(data, config);

    RadialProfile prof;
    prof.v_data_hat = objective_value(plain, model, theta_hat);

    // The first grid point runs the same multistart as itrp (a one-point grid
    // reproduces its min V_tot); later points chain from the previous optimum.
    Eigen::VectorXd warm = theta_hat;
    for (std::size_t i = 0; i < r_grid.size(); ++i) {
        const double radius = r_grid[i];
        ObjectiveSpec penalized = plain;
        penalized.penalty = RadialPenalty::around(theta_hat, radius, config.lambda, subset);
        FitResult fit;
        if (i == 0) {
            fit = multistart(model, penalized, warm, config.opt).best;
        } else {
            fit = minimize(model, penalized, warm, config.opt);
            if (!fit.feasible) throw OptimizationError("radial profile fit failed");
        }
        prof.radii.push_back(radius);
        prof.v_tot.push_back(fit.value);
        prof.delta_v.push_back(fit.value - prof.v_data_hat);
        prof.theta_star.push_back(fit.theta);
        warm = fit.theta;
    }
    return prof;
}

double math_mode_sigma(double x, const IntegratorConfig& config, int n_sim) {
    return static_cast<double>(n_sim) * (config.atol + config.rtol * std::abs(x));
}

Dataset math_mode_dataset(const DynamicModel& model, const Eigen::VectorXd& theta,
                          const Dataset& data, int n_sim, const IntegratorConfig& config) {
    if (n_sim < 2) throw Error("math mode needs at least two points");
    if (data.points().empty()) throw Error("math mode needs a dataset to take the time span from");

    const auto [t0, t1] = data.time_span();
    std::vector<std::pair<std::string, std::string>> series;
    for (const auto& pt : data.points()) {
        const auto key = std::make_pair(pt.observable, pt.condition);
        if (std::find(series.begin(), series.end(), key) == series.end()) series.push_back(key);
    }

    std::vector<DataPoint> rows;
    for (const auto& [obs, cond] : series) {
        for (int i = 0; i < n_sim; ++i) {
            DataPoint pt;
            pt.observable = obs;
            pt.condition = cond;
            pt.time = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(n_sim - 1);
            pt.value = 0.0;
            pt.sigma = 1.0;
            pt.observable_idx = model.observable_index(obs);
            pt.condition_idx = model.condition_index(cond);
            rows.push_back(std::move(pt));
        }
    }

    const Dataset probe(rows);
    const Predictions pred = predict(model, theta, probe, config);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i].value = pred.g[static_cast<Eigen::Index>(i)];
        rows[i].sigma = math_mode_sigma(rows[i].value, config, n_sim);
    }
    return Dataset(std::move(rows));
}

ProfileCurve profile_likelihood(const DynamicModel& model, const Dataset& data,
                                const Eigen::VectorXd& theta_hat, const std::string& name,
                                const ProfileGridPolicy& policy, const ItrpConfig& config) {
    if (policy.n_points < 3) throw Error("profile grid needs at least three points");
    const auto& space = model.space();
    const int idx = space.index_of(name);
    if (idx < 0) throw Error("unknown parameter: " + name);
    if (space.param(idx).fixed) throw Error("cannot profile a fixed parameter: " + name);
    const int pos = space.free_position(idx);

    const double center = theta_hat[pos];
    const double lo = space.param(idx).lower;
    const double hi = space.param(idx).upper;
    const double step = 2.0 * policy.half_width / static_cast<double>(policy.n_points - 1);

    std::vector<double> ps;
    for (int j = 0; j < policy.n_points; ++j) {
        const double p = center - policy.half_width + step * static_cast<double>(j);
        if (p < lo || p > hi) continue;
        ps.push_back(p);
    }
    if (ps.empty()) throw Error("profile grid lies entirely outside the bounds");

    int c = 0;
    for (std::size_t j = 1; j < ps.size(); ++j)
        if (std::abs(ps[j] - center) < std::abs(ps[static_cast<std::size_t>(c)] - center))
            c = static_cast<int>(j);

    const ObjectiveSpec spec = plain_spec(data, config);

    ProfileCurve curve;
    curve.parameter = name;
    curve.center_index = c;
    curve.points.resize(ps.size());

    auto eval_chain = [&](int from, int to, int dir) {
        Eigen::VectorXd warm_full = theta_hat;
        for (int j = from; j != to; j += dir) {
            const double p = ps[static_cast<std::size_t>(j)];
            const DynamicModel fixed = model.with_fixed(name, p);
            const Eigen::VectorXd th0 = remap_free(model, warm_full, fixed);
            const FitResult fit = minimize(fixed, spec, th0, config.opt);
            if (!fit.feasible) throw OptimizationError("profile fit failed for " + name);

            Eigen::VectorXd full = warm_full;
            full[pos] = p;
            for (int r = 0; r < fixed.space().n_free(); ++r) {
                const std::string& rn = fixed.space().free_name(r);
                full[space.free_position(space.index_of(rn))] = fit.theta[r];
            }

            auto& point = curve.points[static_cast<std::size_t>(j)];
            point.p = p;
            point.value = fit.value;
            point.theta = full;
            warm_full = std::move(full);
        }
    };

    eval_chain(c, static_cast<int>(ps.size()), +1);
    eval_chain(c - 1, -1, -1);
    return curve;
}

double pl_span(const ProfileCurve& curve) {
    double lo = curve.points.front().value;
    double hi = lo;
    for (const auto& pt : curve.points) {
        lo = std::min(lo, pt.value);
        hi = std::max(hi, pt.value);
    }
    return hi - lo;
}

double pl_rise_left(const ProfileCurve& curve) {
    const double v0 = curve.points[static_cast<std::size_t>(curve.center_index)].value;
    double rise = 0.0;
    for (int j = 0; j < curve.center_index; ++j)
        rise = std::max(rise, curve.points[static_cast<std::size_t>(j)].value - v0);
    return rise;
}

double pl_rise_right(const ProfileCurve& curve) {
    const double v0 = curve.points[static_cast<std::size_t>(curve.center_index)].value;
    double rise = 0.0;
    for (std::size_t j = static_cast<std::size_t>(curve.center_index) + 1; j < curve.points.size(); ++j)
        rise = std::max(rise, curve.points[j].value - v0);
    return rise;
}

bool pl_flat(const ProfileCurve& curve, double delta) { return pl_span(curve) < delta; }

bool pl_rises_one_side(const ProfileCurve& curve, double delta) {
    return std::max(pl_rise_left(curve), pl_rise_right(curve)) > delta;
}

bool pl_rises_both_sides(const ProfileCurve& curve, double delta) {
    return std::min(pl_rise_left(curve), pl_rise_right(curve)) > delta;
}

bool pl_interior_minimum(const ProfileCurve& curve) {
    std::size_t arg = 0;
    for (std::size_t j = 1; j < curve.points.size(); ++j)
        if (curve.points[j].value < curve.points[arg].value) arg = j;
    return arg > 0 && arg + 1 < curve.points.size();
}

}  // namespace itrp
