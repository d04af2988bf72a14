#include "itrp/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <thread>

#include "itrp/errors.hpp"
#include "itrp/identifiability.hpp"
#include "itrp/model.hpp"
#include "itrp/report.hpp"
#include "itrp/rng.hpp"

namespace itrp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<double> parse_times(const std::string& text) {
    double start = 0.0;
    double step = 0.0;
    double stop = 0.0;
    char sep1 = 0;
    char sep2 = 0;
    std::istringstream in(text);
    if (!(in >> start >> sep1 >> step >> sep2 >> stop) || sep1 != ':' || sep2 != ':' ||
        !(in >> std::ws).eof())
        throw Error("bad --times, expected start:step:stop");
    if (step <= 0.0 || stop < start) throw Error("bad --times range");
    std::vector<double> out;
    for (double t = start; t <= stop + 1e-9 * std::max(1.0, std::abs(stop)); t += step)
        out.push_back(t);
    return out;
}

std::vector<double> parse_rgrid(const std::string& text) {
    double lo = 0.0;
    double hi = 0.0;
    int n = 0;
    char sep1 = 0;
    char sep2 = 0;
    std::istringstream in(text);
    if (!(in >> lo >> sep1 >> hi >> sep2 >> n) || sep1 != ':' || sep2 != ':' ||
        !(in >> std::ws).eof())
        throw Error("bad --rgrid, expected lo:hi:n");
    if (lo <= 0.0 || hi < lo || n < 1) throw Error("bad --rgrid range");
    std::vector<double> out;
    if (n == 1) {
        out.push_back(lo);
        return out;
    }
    for (int i = 0; i < n; ++i)
        out.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
    return out;
}

std::vector<std::string> split_names(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(text);
    while (std::getline(in, cur, ','))
        if (!cur.empty()) out.push_back(cur);
    return out;
}

ErrorTermMode parse_error_term(const std::string& text) {
    if (text == "auto") return ErrorTermMode::Auto;
    if (text == "logterm") return ErrorTermMode::LogTerm;
    if (text == "plainchi2") return ErrorTermMode::PlainChi2;
    throw Error("bad --error-term, expected auto|logterm|plainchi2");
}

int verdict_exit(Verdict v) {
    switch (v) {
        case Verdict::Identifiable: return 0;
        case Verdict::NonIdentifiable: return 10;
        case Verdict::SuspectStart: return 20;
    }
    return 1;
}

struct CommonOpts {
    std::string model_path;
    std::string data_path;
    std::string out_path;
    std::string positive_control;
    std::uint64_t seed = 0;
    int jobs = 0;  // 0 = hardware concurrency
    int n_starts = 5;
    double tol_fun = 1e-6;
    double grad_tol = 1e-8;
    int max_iter = 1000;
    double atol = 1e-8;
    double rtol = 1e-8;
    std::string error_term = "auto";
};

struct ItrpOpts {
    double radius = 1.0;
    std::optional<double> lambda;
    double delta = 1e-3;
    std::string subset;
    bool math_mode = false;
    int n_sim = 100;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_data) {
    cmd->add_option("--model", o.model_path, "model file (json)")->required();
    auto* data = cmd->add_option("--data", o.data_path, "data file (csv)");
    if (needs_data) data->required();
    cmd->add_option("--out", o.out_path, "report file (default: stdout)");
    cmd->add_option("--seed", o.seed, "rng seed for the extra starts");
    cmd->add_option("--jobs", o.jobs, "worker threads (default: all cores)");
    cmd->add_option("--nstarts", o.n_starts, "number of optimization starts");
    cmd->add_option("--tolfun", o.tol_fun, "stop when a step improves by less");
    cmd->add_option("--maxiter", o.max_iter, "iteration cap per start");
    cmd->add_option("--atol", o.atol, "integrator absolute tolerance");
    cmd->add_option("--rtol", o.rtol, "integrator relative tolerance");
    cmd->add_option("--error-term", o.error_term, "auto|logterm|plainchi2");
    cmd->add_option("--positive-control", o.positive_control,
                    "replace this parameter by a product of two new ones");
}

void add_itrp(CLI::App* cmd, ItrpOpts& o) {
    cmd->add_option("--radius", o.radius, "penalty radius R, estimation scale");
    cmd->add_option("--lambda", o.lambda, "penalty strength (default 1/R^2)");
    cmd->add_option("--delta", o.delta, "verdict threshold");
    cmd->add_option("--subset", o.subset, "comma list of penalty parameters");
    cmd->add_flag("--math-mode", o.math_mode, "test on noise-free simulated data");
    cmd->add_option("--nsim", o.n_sim, "math mode points per observable");
}

ItrpConfig make_config(const CommonOpts& c, const ItrpOpts& it) {
    ItrpConfig cfg;
    cfg.radius = it.radius;
    cfg.lambda = it.lambda;
    cfg.delta = it.delta;
    cfg.subset = split_names(it.subset);
    cfg.error_mode = parse_error_term(c.error_term);
    cfg.opt.tol_fun = c.tol_fun;
    cfg.opt.grad_tol = c.grad_tol;
    cfg.opt.max_iter = c.max_iter;
    cfg.opt.n_starts = c.n_starts;
    cfg.opt.seed = c.seed;
    cfg.opt.jobs = c.jobs > 0 ? c.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    cfg.integrator.atol = c.atol;
    cfg.integrator.rtol = c.rtol;
    return cfg;
}

DynamicModel load_model_with_opts(const CommonOpts& c) {
    DynamicModel model = load_model(c.model_path);
    if (!c.positive_control.empty()) {
        PositiveControlTransform t;
        t.target = c.positive_control;
        t.factor_a = c.positive_control + "a";
        t.factor_b = c.positive_control + "b";
        model = model.apply_positive_control(t);
    }
    return model;
}

void echo_config(ReportNode& root, const std::string& command, const CommonOpts& c,
                 const ItrpOpts* it, const ItrpConfig& cfg) {
    root.set("command", command);
    root.set("model_file", c.model_path);
    if (!c.data_path.empty()) root.set("data_file", c.data_path);
    if (!c.positive_control.empty()) root.set("positive_control", c.positive_control);
    auto& conf = root.section("config");
    conf.set("seed", static_cast<long long>(c.seed));
    conf.set("n_starts", c.n_starts);
    conf.set("tol_fun", c.tol_fun);
    conf.set("grad_tol", c.grad_tol);
    conf.set("max_iter", c.max_iter);
    conf.set("atol", c.atol);
    conf.set("rtol", c.rtol);
    conf.set("error_term", c.error_term);
    if (it) {
        conf.set("radius", it->radius);
        conf.set("lambda", it->lambda ? *it->lambda : 1.0 / (it->radius * it->radius));
        conf.set("delta", it->delta);
        conf.set("subset", it->subset.empty() ? std::string("all") : it->subset);
        if (it->math_mode) {
            conf.set("math_mode", true);
            conf.set("n_sim", it->n_sim);
        }
    }
}

void put_theta(ReportNode& parent, const std::string& key, const DynamicModel& model,
               const Eigen::VectorXd& est) {
    auto& node = parent.section(key);
    auto& est_node = node.section("est");
    for (int j = 0; j < model.space().n_free(); ++j)
        est_node.set(model.space().free_name(j), est[j]);
    const Eigen::VectorXd nat = model.space().to_natural(est);
    auto& nat_node = node.section("natural");
    for (int j = 0; j < model.space().n_free(); ++j)
        nat_node.set(model.space().free_name(j), nat[j]);
}

void put_starts(ReportNode& parent, const MultistartResult& ms) {
    auto& node = parent.section("starts");
    node.set("n", static_cast<int>(ms.starts.size()));
    node.set("best_index", ms.best_index);
    for (const auto& rec : ms.starts) {
        auto& s = node.section("start_" + std::to_string(rec.index));
        s.set("value", rec.fit.feasible ? rec.fit.value : std::numeric_limits<double>::infinity());
        s.set("iterations", rec.fit.iterations);
        s.set("n_residual_evals", rec.fit.n_residual_evals);
        s.set("stop", to_string(rec.fit.stop));
        s.set("feasible", rec.fit.feasible);
    }
}

void put_fit(ReportNode& root, const DynamicModel& model, const FitSummary& fit) {
    auto& node = root.section("fit");
    node.set("v_data", fit.v_data);
    put_theta(node, "theta_hat", model, fit.theta_hat);
    put_starts(node, fit.starts);
}

void put_itrp(ReportNode& parent, const std::string& key, const DynamicModel& model,
              const ItrpReport& rep) {
    auto& node = parent.section(key);
    node.set("v_data_hat", rep.v_data_hat);
    node.set("min_v_tot", rep.min_v_tot);
    node.set("delta_v", rep.delta_v);
    node.set("verdict", to_string(rep.verdict));
    node.set("least_identifiable", rep.least_name);
    node.set("v_data_star", rep.v_data_star);
    node.set("v_pen_star", rep.v_pen_star);
    std::string subset_names;
    for (const int pos : rep.subset) {
        if (!subset_names.empty()) subset_names += ",";
        subset_names += model.space().free_name(pos);
    }
    node.set("penalty_subset", subset_names);
    put_theta(node, "theta_star", model, rep.theta_star);
    auto& moved = node.section("displacement");
    for (const int pos : rep.subset)
        moved.set(model.space().free_name(pos), std::abs(rep.theta_star[pos] - rep.theta_hat[pos]));
    put_starts(node, rep.starts);
}

void deliver(const ReportNode& root, const std::string& out_path) {
    if (out_path.empty()) {
        root.write(std::cout);
        return;
    }
    std::ofstream os(out_path);
    if (!os) throw Error("cannot write " + out_path);
    root.write(os);
}

void write_pl_csv(const std::string& path, const std::vector<ProfileCurve>& curves) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path);
    os << "parameter,p,value\n";
    for (const auto& curve : curves)
        for (const auto& pt : curve.points)
            os << curve.parameter << ',' << format_real(pt.p) << ',' << format_real(pt.value)
               << '\n';
}

void write_path_csv(const std::string& path, const DynamicModel& model,
                    const RadialProfile& prof) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path);
    os << "radius,v_tot,delta_v";
    for (int j = 0; j < model.space().n_free(); ++j) os << ',' << model.space().free_name(j);
    os << '\n';
    for (std::size_t i = 0; i < prof.radii.size(); ++i) {
        os << format_real(prof.radii[i]) << ',' << format_real(prof.v_tot[i]) << ','
           << format_real(prof.delta_v[i]);
        for (int j = 0; j < model.space().n_free(); ++j)
            os << ',' << format_real(prof.theta_star[i][j]);
        os << '\n';
    }
}

struct SimulateOpts {
    std::string model_path;
    std::string out_path;
    std::string times = "0:5:50";
    std::string theta;
    double sigma = 0.1;
    std::uint64_t seed = 1;
    double atol = 1e-8;
    double rtol = 1e-8;
};

int cmd_simulate(const SimulateOpts& o) {
    DynamicModel model = load_model(o.model_path);
    if (o.sigma < 0.0) throw Error("--sigma must be >= 0");

    Eigen::VectorXd est = model.space().reference_free();
    if (!o.theta.empty()) {
        Eigen::VectorXd nat = model.space().to_natural(est);
        for (const auto& assign : split_names(o.theta)) {
            const std::size_t eq = assign.find('=');
            if (eq == std::string::npos) throw Error("bad --theta, expected name=value,...");
            const std::string name = assign.substr(0, eq);
            const double value = std::stod(assign.substr(eq + 1));
            const int idx = model.space().index_of(name);
            if (idx < 0) throw Error("unknown parameter in --theta: " + name);
            const int pos = model.space().free_position(idx);
            if (pos < 0) throw Error("--theta sets a fixed parameter: " + name);
            nat[pos] = value;
        }
        est = model.space().from_natural(nat);
    }

    const std::vector<double> times = parse_times(o.times);
    std::vector<DataPoint> rows;
    for (const auto& cond : model.conditions()) {
        for (const auto& obs : model.observables()) {
            for (const double t : times) {
                DataPoint pt;
                pt.observable = obs.id;
                pt.condition = cond.id;
                pt.time = t;
                pt.observable_idx = model.observable_index(obs.id);
                pt.condition_idx = model.condition_index(cond.id);
                pt.sigma = o.sigma > 0.0 ? o.sigma : 1.0;
                rows.push_back(std::move(pt));
            }
        }
    }

    IntegratorConfig integ;
    integ.atol = o.atol;
    integ.rtol = o.rtol;
    const Predictions pred = predict(model, est, Dataset(rows), integ);

    Rng rng(o.seed);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double noise = o.sigma > 0.0 ? o.sigma * rng.gaussian() : 0.0;
        rows[i].value = pred.g[static_cast<Eigen::Index>(i)] + noise;
    }
    const std::size_t n_rows = rows.size();
    write_data_csv(o.out_path, Dataset(std::move(rows)));
    std::cout << "wrote " << o.out_path << " (" << n_rows << " rows)\n";
    return 0;
}

int cmd_fit(const CommonOpts& c) {
    const auto t0 = Clock::now();
    const DynamicModel model = load_model_with_opts(c);
    const Dataset data = load_data(c.data_path, model);
    const ItrpConfig cfg = make_config(c, ItrpOpts{});

    const auto t_fit = Clock::now();
    const FitSummary fit = fit_data(model, data, model.space().reference_free(), cfg);

    ReportNode root;
    echo_config(root, "fit", c, nullptr, cfg);
    put_fit(root, model, fit);
    auto& timings = root.section("timings");
    timings.set("load_seconds", std::chrono::duration<double>(t_fit - t0).count());
    timings.set("fit_seconds", seconds_since(t_fit));
    deliver(root, c.out_path);
    return 0;
}

int cmd_itrp(const CommonOpts& c, const ItrpOpts& it) {
    const DynamicModel model = load_model_with_opts(c);
    const Dataset data = load_data(c.data_path, model);
    const ItrpConfig cfg = make_config(c, it);

    const auto t_fit = Clock::now();
    const FitSummary fit = fit_data(model, data, model.space().reference_free(), cfg);
    const double fit_seconds = seconds_since(t_fit);

    const auto t_itrp = Clock::now();
    ItrpReport rep;
    const DynamicModel* report_model = &model;
    DynamicModel math_model;
    Dataset math_data;
    if (it.math_mode) {
        math_model = model.with_sigma_from_data();
        math_data = math_mode_dataset(math_model, fit.theta_hat, data, it.n_sim, cfg.integrator);
        rep = itrp(math_model, math_data, fit.theta_hat, cfg);
        report_model = &math_model;
    } else {
        rep = itrp(model, data, fit.theta_hat, cfg);
    }

    ReportNode root;
    echo_config(root, "itrp", c, &it, cfg);
    put_fit(root, model, fit);
    if (it.math_mode) root.set("math_points", math_data.size());
    put_itrp(root, "itrp", *report_model, rep);
    auto& timings = root.section("timings");
    timings.set("fit_seconds", fit_seconds);
    timings.set("itrp_seconds", seconds_since(t_itrp));
    deliver(root, c.out_path);
    return verdict_exit(rep.verdict);
}

int cmd_iterate(const CommonOpts& c, const ItrpOpts& it) {
    const DynamicModel model = load_model_with_opts(c);
    const Dataset data = load_data(c.data_path, model);
    const ItrpConfig cfg = make_config(c, it);

    const auto t_fit = Clock::now();
    const FitSummary fit = fit_data(model, data, model.space().reference_free(), cfg);
    const double fit_seconds = seconds_since(t_fit);

    const auto t_iter = Clock::now();
    DynamicModel work_model = model;
    Dataset work_data = data;
    if (it.math_mode) {
        work_model = model.with_sigma_from_data();
        work_data = math_mode_dataset(work_model, fit.theta_hat, data, it.n_sim, cfg.integrator);
    }
    const IterationTrail trail = iterate(work_model, work_data, fit.theta_hat, cfg);

    ReportNode root;
    echo_config(root, "iterate", c, &it, cfg);
    put_fit(root, model, fit);
    auto& node = root.section("iterate");
    put_itrp(node, "initial", work_model, trail.initial);
    node.set("n_fixed", static_cast<int>(trail.steps.size()));
    const ItrpReport* final_rep = &trail.initial;
    // Each step's report refers to the model with all fixes so far applied.
    DynamicModel step_model = work_model;
    auto& steps = node.section("steps");
    for (std::size_t i = 0; i < trail.steps.size(); ++i) {
        const auto& st = trail.steps[i];
        auto& sn = steps.section("step_" + std::to_string(i + 1));
        sn.set("fixed", st.fixed_name);
        sn.set("fixed_value_est", st.fixed_value);
        step_model = step_model.with_fixed(st.fixed_name, st.fixed_value);
        if (st.report) {
            put_itrp(sn, "report", step_model, *st.report);
            final_rep = &*st.report;
        } else {
            sn.set("exhausted", true);
        }
    }
    node.set("final_verdict", to_string(final_rep->verdict));
    auto& timings = root.section("timings");
    timings.set("fit_seconds", fit_seconds);
    timings.set("iterate_seconds", seconds_since(t_iter));
    deliver(root, c.out_path);
    return verdict_exit(final_rep->verdict);
}

int cmd_profile(const CommonOpts& c, const ItrpOpts& it, const std::string& target) {
    const DynamicModel model = load_model_with_opts(c);
    const Dataset data = load_data(c.data_path, model);
    const ItrpConfig cfg = make_config(c, it);

    const auto t_fit = Clock::now();
    const FitSummary fit = fit_data(model, data, model.space().reference_free(), cfg);
    const double fit_seconds = seconds_since(t_fit);

    std::vector<std::string> names;
    if (!target.empty()) {
        names.push_back(target);
    } else {
        for (int j = 0; j < model.space().n_free(); ++j) names.push_back(model.space().free_name(j));
    }

    const auto t_prof = Clock::now();
    const ProfileGridPolicy policy;
    std::vector<ProfileCurve> curves;
    for (const auto& name : names)
        curves.push_back(profile_likelihood(model, data, fit.theta_hat, name, policy, cfg));

    bool any_flat = false;
    bool suspect = false;
    ReportNode root;
    echo_config(root, "profile", c, &it, cfg);
    put_fit(root, model, fit);
    auto& node = root.section("profiles");
    node.set("half_width", policy.half_width);
    node.set("points_per_profile", policy.n_points);
    for (const auto& curve : curves) {
        auto& pn = node.section(curve.parameter);
        const double v0 = curve.points[static_cast<std::size_t>(curve.center_index)].value;
        double vmin = curve.points.front().value;
        for (const auto& pt : curve.points) vmin = std::min(vmin, pt.value);
        pn.set("n_points", static_cast<int>(curve.points.size()));
        pn.set("center_value", v0);
        pn.set("span", pl_span(curve));
        pn.set("rise_left", pl_rise_left(curve));
        pn.set("rise_right", pl_rise_right(curve));
        pn.set("flat", pl_flat(curve, it.delta));
        pn.set("interior_minimum", pl_interior_minimum(curve));
        any_flat = any_flat || pl_flat(curve, it.delta);
        suspect = suspect || vmin < fit.v_data - it.delta;
    }
    const Verdict verdict = suspect      ? Verdict::SuspectStart
                            : any_flat   ? Verdict::NonIdentifiable
                                         : Verdict::Identifiable;
    node.set("verdict", to_string(verdict));
    auto& timings = root.section("timings");
    timings.set("fit_seconds", fit_seconds);
    timings.set("profile_seconds", seconds_since(t_prof));
    deliver(root, c.out_path);
    if (!c.out_path.empty()) write_pl_csv(c.out_path + ".pl.csv", curves);
    return verdict_exit(verdict);
}

int cmd_radial(const CommonOpts& c, const ItrpOpts& it, const std::string& rgrid) {
    const DynamicModel model = load_model_with_opts(c);
    const Dataset data = load_data(c.data_path, model);
    const ItrpConfig cfg = make_config(c, it);

    const auto t_fit = Clock::now();
    const FitSummary fit = fit_data(model, data, model.space().reference_free(), cfg);
    const double fit_seconds = seconds_since(t_fit);

    const auto t_prof = Clock::now();
    const RadialProfile prof = radial_profile(model, data, fit.theta_hat, parse_rgrid(rgrid), cfg);

    double vmin = prof.v_tot.front();
    double vmax = vmin;
    double dmin = prof.delta_v.front();
    for (std::size_t i = 0; i < prof.v_tot.size(); ++i) {
        vmin = std::min(vmin, prof.v_tot[i]);
        vmax = std::max(vmax, prof.v_tot[i]);
        dmin = std::min(dmin, prof.delta_v[i]);
    }
    const Verdict verdict = dmin < -it.delta          ? Verdict::SuspectStart
                            : vmax - vmin < it.delta  ? Verdict::NonIdentifiable
                                                      : Verdict::Identifiable;

    ReportNode root;
    echo_config(root, "radial-profile", c, &it, cfg);
    root.set("rgrid", rgrid);
    put_fit(root, model, fit);
    auto& node = root.section("radial_profile");
    node.set("v_data_hat", prof.v_data_hat);
    node.set("n_points", static_cast<int>(prof.radii.size()));
    node.set("v_span", vmax - vmin);
    node.set("verdict", to_string(verdict));
    for (std::size_t i = 0; i < prof.radii.size(); ++i) {
        auto& pn = node.section("point_" + std::to_string(i));
        pn.set("radius", prof.radii[i]);
        pn.set("v_tot", prof.v_tot[i]);
        pn.set("delta_v", prof.delta_v[i]);
        put_theta(pn, "theta_star", model, prof.theta_star[i]);
    }
    auto& timings = root.section("timings");
    timings.set("fit_seconds", fit_seconds);
    timings.set("radial_seconds", seconds_since(t_prof));
    deliver(root, c.out_path);
    if (!c.out_path.empty()) write_path_csv(c.out_path + ".path.csv", model, prof);
    return verdict_exit(verdict);
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"identifiability testing by radial penalization for ODE models"};
    app.require_subcommand(1);

    SimulateOpts sim;
    auto* c_sim = app.add_subcommand("simulate-data", "integrate a model and write noisy data");
    c_sim->add_option("--model", sim.model_path, "model file (json)")->required();
    c_sim->add_option("--out", sim.out_path, "output csv")->required();
    c_sim->add_option("--times", sim.times, "observation times start:step:stop");
    c_sim->add_option("--theta", sim.theta, "true parameters name=value,... (natural scale)");
    c_sim->add_option("--sigma", sim.sigma, "noise level (0 writes exact values, unit sigma)");
    c_sim->add_option("--seed", sim.seed, "noise seed");
    c_sim->add_option("--atol", sim.atol, "integrator absolute tolerance");
    c_sim->add_option("--rtol", sim.rtol, "integrator relative tolerance");

    CommonOpts fit_c;
    auto* c_fit = app.add_subcommand("fit", "multi-start fit of the data objective");
    add_common(c_fit, fit_c, true);

    CommonOpts itrp_c;
    ItrpOpts itrp_o;
    auto* c_itrp = app.add_subcommand("itrp", "fit, then test identifiability");
    add_common(c_itrp, itrp_c, true);
    add_itrp(c_itrp, itrp_o);

    CommonOpts iter_c;
    ItrpOpts iter_o;
    auto* c_iter = app.add_subcommand("iterate", "enumerate non-identifiabilities");
    add_common(c_iter, iter_c, true);
    add_itrp(c_iter, iter_o);

    CommonOpts prof_c;
    ItrpOpts prof_o;
    std::string prof_target;
    auto* c_prof = app.add_subcommand("profile", "profile likelihood reference");
    add_common(c_prof, prof_c, true);
    c_prof->add_option("--profile", prof_target, "parameter to profile (default: all)");
    c_prof->add_option("--delta", prof_o.delta, "flatness threshold");

    CommonOpts rad_c;
    ItrpOpts rad_o;
    std::string rgrid = "0.1:2:20";
    auto* c_rad = app.add_subcommand("radial-profile", "penalized optimum over a radius grid");
    add_common(c_rad, rad_c, true);
    c_rad->add_option("--rgrid", rgrid, "radius grid lo:hi:n");
    c_rad->add_option("--lambda", rad_o.lambda, "penalty strength (default 1/R^2)");
    c_rad->add_option("--delta", rad_o.delta, "flatness threshold");
    c_rad->add_option("--subset", rad_o.subset, "comma list of penalty parameters");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (app.got_subcommand(c_sim)) return cmd_simulate(sim);
        if (app.got_subcommand(c_fit)) return cmd_fit(fit_c);
        if (app.got_subcommand(c_itrp)) return cmd_itrp(itrp_c, itrp_o);
        if (app.got_subcommand(c_iter)) return cmd_iterate(iter_c, iter_o);
        if (app.got_subcommand(c_prof)) return cmd_profile(prof_c, prof_o, prof_target);
        if (app.got_subcommand(c_rad)) return cmd_radial(rad_c, rad_o, rgrid);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<std::string> full;
    full.reserve(args.size() + 1);
    full.emplace_back("itrp");
    full.insert(full.end(), args.begin(), args.end());
    std::vector<char*> argv;
    argv.reserve(full.size());
    for (auto& s : full) argv.push_back(s.data());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace itrp
