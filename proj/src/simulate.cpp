#include "itrp/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace itrp {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// Error weights: 5th-order solution minus the embedded 4th-order one.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
// Dense-output weights.
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

// Right-hand side of the augmented system: y = [x, vec(S)] with
// Sdot = (df/dx) S + df/dtheta_est.
class AugmentedSystem {
  public:
    AugmentedSystem(const DynamicModel& model, const Eigen::VectorXd& theta,
                    const Condition& condition)
        : model_(model), nx_(model.n_states()), np_(model.space().n_free()) {
        theta_nat_full_ = model.space().natural_full(theta);
        env_ = model.make_env(theta_nat_full_, condition);
        col_scale_.resize(np_);
        for (int j = 0; j < np_; ++j) {
            const int pi = model.space().free_param_index(j);
            col_scale_[j] = model.space().scale_factor(j, theta_nat_full_[pi]);
        }
        jx_.resize(nx_, nx_);
        jp_.resize(nx_, np_);
    }

    int dim() const { return nx_ * (1 + np_); }
    int n_states() const { return nx_; }
    int n_params() const { return np_; }
    const std::vector<double>& env() const { return env_; }

    Eigen::VectorXd initial() {
        Eigen::VectorXd y = Eigen::VectorXd::Zero(dim());
        for (int i = 0; i < nx_; ++i)
            y[i] = model_.states()[static_cast<std::size_t>(i)].init->eval(env_);
        const auto& dx0 = model_.derivs().dx0dp;
        for (int i = 0; i < nx_; ++i)
            for (int j = 0; j < np_; ++j)
                y[nx_ + i * np_ + j] =
                    dx0[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]->eval(env_) *
                    col_scale_[static_cast<std::size_t>(j)];
        return y;
    }

    void operator()(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        for (int i = 0; i < nx_; ++i) env_[static_cast<std::size_t>(model_.state_symbol(i))] = y[i];
        env_[static_cast<std::size_t>(model_.time_symbol())] = t;
        const auto& d = model_.derivs();
        for (int i = 0; i < nx_; ++i) {
            dy[i] = model_.rates()[static_cast<std::size_t>(i)]->eval(env_);
            for (int j = 0; j < nx_; ++j)
                jx_(i, j) = d.dfdx[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]->eval(env_);
            for (int j = 0; j < np_; ++j)
                jp_(i, j) = d.dfdp[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]->eval(env_) *
                            col_scale_[static_cast<std::size_t>(j)];
        }
        if (np_ > 0) {
            const Eigen::Map<const Eigen::MatrixXd> S(y.data() + nx_, np_, nx_);
            Eigen::Map<Eigen::MatrixXd> dS(dy.data() + nx_, np_, nx_);
            // S is stored row-major per state: y[nx + i*np + j] = S_ij.
            dS.noalias() = S * jx_.transpose() + jp_.transpose();
        }
    }

    Eigen::VectorXd theta_nat_full_;

  private:
    const DynamicModel& model_;
    int nx_, np_;
    std::vector<double> env_;
    std::vector<double> col_scale_;
    Eigen::MatrixXd jx_, jp_;
};

double error_norm(const Eigen::VectorXd& err, const Eigen::VectorXd& y0, const Eigen::VectorXd& y1,
                  double atol, double rtol) {
    double sum = 0.0;
    for (int i = 0; i < err.size(); ++i) {
        const double sk = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double q = err[i] / sk;
        sum += q * q;
    }
    return std::sqrt(sum / static_cast<double>(err.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

Trajectory integrate(const DynamicModel& model, const Eigen::VectorXd& theta,
                     const Condition& condition, std::span<const double> times,
                     const IntegratorConfig& config) {
    if (times.empty()) throw Error("integrate: no requested times");
    for (std::size_t i = 0; i + 1 < times.size(); ++i)
        if (!(times[i] <= times[i + 1])) throw Error("integrate: times must be sorted ascending");
    if (times.front() < 0.0) throw Error("integrate: times must be nonnegative");

    AugmentedSystem sys(model, theta, condition);
    const int nx = sys.n_states();
    const int np = sys.n_params();
    const int dim = sys.dim();

    Trajectory out;
    out.times.assign(times.begin(), times.end());
    out.states.reserve(times.size());
    out.sensitivities.reserve(times.size());

    auto record = [&](const Eigen::VectorXd& y) {
        out.states.push_back(y.head(nx));
        Eigen::MatrixXd S(nx, np);
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < np; ++j) S(i, j) = y[nx + i * np + j];
        out.sensitivities.push_back(std::move(S));
    };

    double t = 0.0;
    Eigen::VectorXd y = sys.initial();
    if (!y.allFinite())
        throw IntegrationError("non-finite initial state", to_std(theta));

    std::size_t next = 0;
    while (next < times.size() && times[next] <= t) {
        record(y);
        ++next;
    }
    if (next == times.size()) return out;

    const double t_end = times.back();
    Eigen::VectorXd k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim);
    Eigen::VectorXd ytmp(dim), ynew(dim), yerr(dim);
    Eigen::VectorXd rcont1(dim), rcont2(dim), rcont3(dim), rcont4(dim), rcont5(dim);

    sys(t, y, k1);
    if (!k1.allFinite()) throw IntegrationError("non-finite derivative at t=0", to_std(theta));

    double h = config.initial_step;
    if (h <= 0.0) {
        // Crude starting step from the scaled derivative magnitude; the
        // controller corrects it within a few steps.
        const double d0 = error_norm(y, y, y, config.atol, config.rtol);
        const double d1 = error_norm(k1, y, y, config.atol, config.rtol);
        h = (d1 > 1e-10) ? 0.01 * d0 / d1 : 1e-6 * (t_end - t);
        h = std::min(std::max(h, 1e-8), t_end - t);
    }

    long n_steps = 0;
    bool last_rejected = false;
    while (t < t_end) {
        if (++n_steps > config.max_steps)
            throw IntegrationError("step count exceeded (" + std::to_string(config.max_steps) + ")",
                                   to_std(theta));
        h = std::min(h, t_end - t);

        ytmp = y + h * (a21 * k1);
        sys(t + c2 * h, ytmp, k2);
        ytmp = y + h * (a31 * k1 + a32 * k2);
        sys(t + c3 * h, ytmp, k3);
        ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        sys(t + c4 * h, ytmp, k4);
        ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        sys(t + c5 * h, ytmp, k5);
        ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        sys(t + h, ytmp, k6);
        ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        sys(t + h, ynew, k7);  // FSAL

        if (!ynew.allFinite() || !k7.allFinite()) {
            // Blow-up inside the step: retry smaller, give up when h degenerates.
            h *= 0.25;
            last_rejected = true;
            if (h < 1e-14 * std::max(1.0, std::abs(t)))
                throw IntegrationError("non-finite state at t=" + std::to_string(t), to_std(theta));
            sys(t, y, k1);
            continue;
        }

        yerr = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double err = error_norm(yerr, y, ynew, config.atol, config.rtol);

        if (err <= 1.0) {
            // Dense output coefficients for this accepted interval.
            rcont1 = y;
            rcont2 = ynew - y;
            rcont3 = h * k1 - rcont2;
            rcont4 = rcont2 - h * k7 - rcont3;
            rcont5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

            const double t_new = t + h;
            while (next < times.size() && times[next] <= t_new + 1e-14 * std::max(1.0, t_new)) {
                const double s = (times[next] - t) / h;
                const double s1 = 1.0 - s;
                ytmp = rcont1 + s * (rcont2 + s1 * (rcont3 + s * (rcont4 + s1 * rcont5)));
                record(ytmp);
                ++next;
            }

            t = t_new;
            y.swap(ynew);
            k1.swap(k7);

            double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
            fac = std::min(fac, last_rejected ? 1.0 : 5.0);
            fac = std::max(fac, 0.2);
            h *= fac;
            last_rejected = false;
        } else {
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
            last_rejected = true;
        }
    }
    // Anything left is a duplicate of the final time within roundoff.
    while (next < times.size()) {
        record(y);
        ++next;
    }
    return out;
}

Predictions predict(const DynamicModel& model, const Eigen::VectorXd& theta, const Dataset& data,
                    const IntegratorConfig& config) {
    const int n = data.size();
    const int np = model.space().n_free();
    Predictions out;
    out.g.resize(n);
    out.dg.resize(n, np);
    out.sigma.resize(n);
    out.dsigma = Eigen::MatrixXd::Zero(n, np);
    out.sigma_from_data.assign(static_cast<std::size_t>(n), false);

    // One integration per condition, at the union of its requested times.
    std::map<int, std::vector<double>> times_by_cond;
    for (const auto& p : data.points()) times_by_cond[p.condition_idx].push_back(p.time);

    const Eigen::VectorXd theta_nat = model.space().natural_full(theta);
    std::vector<double> col_scale(static_cast<std::size_t>(np));
    for (int j = 0; j < np; ++j)
        col_scale[static_cast<std::size_t>(j)] =
            model.space().scale_factor(j, theta_nat[model.space().free_param_index(j)]);

    for (auto& [cond_idx, times] : times_by_cond) {
        std::sort(times.begin(), times.end());
        times.erase(std::unique(times.begin(), times.end()), times.end());
        const Condition& cond = model.conditions()[static_cast<std::size_t>(cond_idx)];
        Trajectory traj = integrate(model, theta, cond, times, config);

        std::vector<double> env = model.make_env(theta_nat, cond);
        const auto& d = model.derivs();

        for (int i = 0; i < n; ++i) {
            const DataPoint& p = data.points()[static_cast<std::size_t>(i)];
            if (p.condition_idx != cond_idx) continue;
            const auto it = std::lower_bound(times.begin(), times.end(), p.time);
            const std::size_t ti = static_cast<std::size_t>(it - times.begin());

            const Eigen::VectorXd& x = traj.states[ti];
            const Eigen::MatrixXd& S = traj.sensitivities[ti];
            for (int s = 0; s < model.n_states(); ++s)
                env[static_cast<std::size_t>(model.state_symbol(s))] = x[s];
            env[static_cast<std::size_t>(model.time_symbol())] = p.time;

            const auto& obs = model.observables()[static_cast<std::size_t>(p.observable_idx)];
            out.g[i] = obs.g->eval(env);
            for (int j = 0; j < np; ++j) {
                double v = d.dgdp[static_cast<std::size_t>(p.observable_idx)][static_cast<std::size_t>(j)]->eval(env) *
                           col_scale[static_cast<std::size_t>(j)];
                for (int s = 0; s < model.n_states(); ++s)
                    v += d.dgdx[static_cast<std::size_t>(p.observable_idx)][static_cast<std::size_t>(s)]->eval(env) *
                         S(s, j);
                out.dg(i, j) = v;
            }

            if (obs.sigma_from_data) {
                if (!p.sigma)
                    throw SchemaError("data point for observable '" + p.observable +
                                      "' needs a sigma column entry");
                out.sigma[i] = *p.sigma;
                out.sigma_from_data[static_cast<std::size_t>(i)] = true;
            } else {
                const double sig = obs.error->eval(env);
                if (!(sig > 0.0))
                    throw IntegrationError(
                        "error model of '" + p.observable + "' produced non-positive sigma",
                        std::vector<double>(theta.data(), theta.data() + theta.size()));
                out.sigma[i] = sig;
                for (int j = 0; j < np; ++j) {
                    double v = d.dedp[static_cast<std::size_t>(p.observable_idx)][static_cast<std::size_t>(j)]->eval(env) *
                               col_scale[static_cast<std::size_t>(j)];
                    for (int s = 0; s < model.n_states(); ++s)
                        v += d.dedx[static_cast<std::size_t>(p.observable_idx)][static_cast<std::size_t>(s)]->eval(env) *
                             S(s, j);
                    out.dsigma(i, j) = v;
                }
            }
        }
    }
    return out;
}

}  // namespace itrp
