#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "itrp/model.hpp"
#include "itrp/rng.hpp"
#include "itrp/simulate.hpp"

using namespace itrp;

namespace {

const std::string kModels = ITRP_MODELS_DIR;

DynamicModel abc() { return load_model(kModels + "/abc.json"); }

// A -> B -> C with rates k1, k2 and A(0) = A0 has the closed form
//   B(t) = A0 k1/(k2-k1) (exp(-k1 t) - exp(-k2 t))
double b_closed(double k1, double k2, double a0, double t) {
    if (k1 == k2) return a0 * k1 * t * std::exp(-k1 * t);
    return a0 * k1 / (k2 - k1) * (std::exp(-k1 * t) - std::exp(-k2 * t));
}

Trajectory run(const DynamicModel& m, const Eigen::VectorXd& theta, std::vector<double> times,
               IntegratorConfig cfg = {}) {
    return integrate(m, theta, m.conditions()[0], times, cfg);
}

}  // namespace

TEST_CASE("states match the closed form") {
    DynamicModel m = abc();
    Eigen::VectorXd theta(3);
    theta << std::log10(0.3), std::log10(0.07), std::log10(2.0);
    std::vector<double> times{0.0, 1.0, 5.0, 10.0, 25.0, 50.0};
    Trajectory tr = run(m, theta, times);
    REQUIRE(tr.states.size() == times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        CHECK(std::abs(tr.states[i][0] - 2.0 * std::exp(-0.3 * t)) < 1e-6);
        CHECK(std::abs(tr.states[i][1] - b_closed(0.3, 0.07, 2.0, t)) < 1e-6);
    }
}

TEST_CASE("equal rate constants hit the degenerate closed form") {
    DynamicModel m = abc();
    Eigen::VectorXd theta(3);
    theta << -1.0, -1.0, 0.0;  // k1 = k2 = 0.1, A0 = 1
    Trajectory tr = run(m, theta, {10.0});
    CHECK(std::abs(tr.states[0][1] - b_closed(0.1, 0.1, 1.0, 10.0)) < 1e-6);
    CHECK(tr.states[0][1] == doctest::Approx(std::exp(-1.0)).epsilon(1e-6));
}

TEST_CASE("the initial time is reproduced exactly") {
    DynamicModel m = abc();
    Eigen::VectorXd theta(3);
    theta << -1.0, -1.0, 0.30102999566398120;  // A0 = 2
    Trajectory tr = run(m, theta, {0.0});
    CHECK(tr.states[0][0] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(tr.states[0][1] == 0.0);
    CHECK(tr.states[0][2] == 0.0);
}

TEST_CASE("mass is conserved") {
    DynamicModel m = abc();
    Rng rng(7);
    for (int rep = 0; rep < 5; ++rep) {
        Eigen::VectorXd theta(3);
        theta << rng.uniform(-2.0, 0.0), rng.uniform(-2.0, 0.0), rng.uniform(-0.5, 0.5);
        const double a0 = std::pow(10.0, theta[2]);
        Trajectory tr = run(m, theta, {0.0, 3.0, 11.0, 29.0, 50.0});
        for (const auto& x : tr.states) CHECK(std::abs(x.sum() - a0) < 1e-8);
    }
}

TEST_CASE("sensitivities agree with central differences") {
    DynamicModel m = abc();
    IntegratorConfig tight;
    tight.atol = 1e-10;
    tight.rtol = 1e-10;
    std::vector<double> times{2.0, 9.0, 31.0};
    const double h = 1e-4;

    Rng rng(11);
    for (int rep = 0; rep < 10; ++rep) {
        Eigen::VectorXd theta(3);
        theta << rng.uniform(-1.6, -0.4), rng.uniform(-1.6, -0.4), rng.uniform(-0.4, 0.4);
        Trajectory tr = run(m, theta, times, tight);
        for (int j = 0; j < 3; ++j) {
            Eigen::VectorXd tp = theta, tm = theta;
            tp[j] += h;
            tm[j] -= h;
            Trajectory trp = run(m, tp, times, tight);
            Trajectory trm = run(m, tm, times, tight);
            for (std::size_t i = 0; i < times.size(); ++i) {
                for (int s = 0; s < 3; ++s) {
                    const double fd = (trp.states[i][s] - trm.states[i][s]) / (2.0 * h);
                    const double sym = tr.sensitivities[i](s, j);
                    CHECK(std::abs(sym - fd) < 1e-5 * std::max(1.0, std::abs(fd)));
                }
            }
        }
    }
}

TEST_CASE("tightening tolerances changes results less than the tolerance") {
    DynamicModel m = abc();
    Eigen::VectorXd theta(3);
    theta << -0.7, -1.2, 0.2;
    IntegratorConfig loose;  // defaults, 1e-8
    IntegratorConfig tight;
    tight.atol = 1e-11;
    tight.rtol = 1e-11;
    Trajectory a = run(m, theta, {17.0}, loose);
    Trajectory b = run(m, theta, {17.0}, tight);
    CHECK(std::abs(a.states[0][1] - b.states[0][1]) < 1e-7);
}

TEST_CASE("step budget overflow raises an integration error") {
    DynamicModel m = abc();
    Eigen::VectorXd theta(3);
    theta << 2.0, 2.0, 0.0;  // fast kinetics
    IntegratorConfig cfg;
    cfg.max_steps = 3;
    CHECK_THROWS_AS(run(m, theta, {50.0}, cfg), IntegrationError);
    try {
        run(m, theta, {50.0}, cfg);
    } catch (const IntegrationError& e) {
        REQUIRE(e.theta.size() == 3);
        CHECK(e.theta[0] == 2.0);
    }
}

TEST_CASE("predictions cover every data row in order") {
    DynamicModel m = abc();
    Dataset data = load_data(kModels + "/abc.csv", m);
    Eigen::VectorXd theta = m.space().reference_free();
    Predictions p = predict(m, theta, data, {});
    REQUIRE(p.g.size() == data.size());
    REQUIRE(p.dg.rows() == data.size());
    REQUIRE(p.dg.cols() == 3);
    for (int i = 0; i < data.size(); ++i) {
        const double t = data.points()[static_cast<std::size_t>(i)].time;
        CHECK(std::abs(p.g[i] - b_closed(0.1, 0.1, 1.0, t)) < 1e-6);
        CHECK(p.sigma_from_data[static_cast<std::size_t>(i)]);
        CHECK(p.sigma[i] == 0.1);
        CHECK(p.dsigma.row(i).norm() == 0.0);
    }
}

TEST_CASE("observation derivatives follow the chain rule through the scaling parameter") {
    DynamicModel m = load_model(kModels + "/abc_rel.json");
    std::vector<DataPoint> rows;
    DataPoint d;
    d.observable = "obsB";
    d.condition = "default";
    d.time = 10.0;
    d.value = 0.0;
    d.sigma = 1.0;
    d.observable_idx = 0;
    d.condition_idx = 0;
    rows.push_back(d);
    Dataset data(rows);

    Eigen::VectorXd theta = m.space().reference_free();
    theta[3] = std::log10(2.0);  // s = 2
    IntegratorConfig tight;
    tight.atol = 1e-12;
    tight.rtol = 1e-12;
    Predictions p = predict(m, theta, data, tight);
    const double b = b_closed(0.1, 0.1, 1.0, 10.0);
    CHECK(std::abs(p.g[0] - 2.0 * b) < 1e-8);
    // g = s*B and d(nat s)/d(log10 s) = ln(10) * s
    CHECK(std::abs(p.dg(0, 3) - std::log(10.0) * 2.0 * b) < 1e-6);
}

TEST_CASE("error-model observables report sigma and its derivatives") {
    DynamicModel m = model_from_json_text(R"({
        "states": [{"name": "A", "init": "A0"}],
        "parameters": [
            {"name": "k", "init": 0.1},
            {"name": "A0", "init": 1.0},
            {"name": "s0", "init": 0.2}
        ],
        "rates": {"A": "-k*A"},
        "observables": [{"id": "oA", "g": "A", "error": "s0 + 0.1*A"}]
    })", "t");

    std::vector<DataPoint> rows;
    DataPoint d;
    d.observable = "oA";
    d.condition = "default";
    d.time = 5.0;
    d.value = 0.5;
    d.observable_idx = 0;
    d.condition_idx = 0;
    rows.push_back(d);
    Dataset data(rows);

    Eigen::VectorXd theta = m.space().reference_free();
    IntegratorConfig tight;
    tight.atol = 1e-12;
    tight.rtol = 1e-12;
    Predictions p = predict(m, theta, data, tight);
    const double a = std::exp(-0.5);
    CHECK(std::abs(p.g[0] - a) < 1e-8);
    CHECK_FALSE(p.sigma_from_data[0]);
    CHECK(std::abs(p.sigma[0] - (0.2 + 0.1 * a)) < 1e-8);

    // d sigma / d log10(s0) = ln(10) * s0, d sigma / d log10(k) via 0.1*dA/dk
    CHECK(std::abs(p.dsigma(0, 2) - std::log(10.0) * 0.2) < 1e-8);
    const double h = 1e-5;
    Eigen::VectorXd tp = theta, tm = theta;
    tp[0] += h;
    tm[0] -= h;
    const double sp = predict(m, tp, data, tight).sigma[0];
    const double sm = predict(m, tm, data, tight).sigma[0];
    CHECK(std::abs(p.dsigma(0, 0) - (sp - sm) / (2.0 * h)) < 1e-6);
}

TEST_CASE("times must be ascending and within reach") {
    DynamicModel m = abc();
    Eigen::VectorXd theta = m.space().reference_free();
    CHECK_THROWS_AS(run(m, theta, {5.0, 1.0}), Error);
}
