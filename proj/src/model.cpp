#include "itrp/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace itrp {

namespace {
constexpr double kLn10 = 2.302585092994045684;
}

// ---------------------------------------------------------------------------
// ParameterSpace

void ParameterSpace::add(Parameter p) {
    for (const auto& q : params_)
        if (q.name == p.name) throw SchemaError("duplicate parameter '" + p.name + "'");
    if (!p.fixed) free_.push_back(static_cast<int>(params_.size()));
    params_.push_back(std::move(p));
}

int ParameterSpace::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < params_.size(); ++i)
        if (params_[i].name == name) return static_cast<int>(i);
    return -1;
}

int ParameterSpace::free_position(int param_index) const {
    for (std::size_t j = 0; j < free_.size(); ++j)
        if (free_[j] == param_index) return static_cast<int>(j);
    return -1;
}

const std::string& ParameterSpace::free_name(int free_position) const {
    return params_[static_cast<std::size_t>(free_[static_cast<std::size_t>(free_position)])].name;
}

Eigen::VectorXd ParameterSpace::reference_free() const {
    Eigen::VectorXd v(n_free());
    for (int j = 0; j < n_free(); ++j) v[j] = params_[static_cast<std::size_t>(free_[static_cast<std::size_t>(j)])].value;
    return v;
}

Eigen::VectorXd ParameterSpace::lower_free() const {
    Eigen::VectorXd v(n_free());
    for (int j = 0; j < n_free(); ++j) v[j] = params_[static_cast<std::size_t>(free_[static_cast<std::size_t>(j)])].lower;
    return v;
}

Eigen::VectorXd ParameterSpace::upper_free() const {
    Eigen::VectorXd v(n_free());
    for (int j = 0; j < n_free(); ++j) v[j] = params_[static_cast<std::size_t>(free_[static_cast<std::size_t>(j)])].upper;
    return v;
}

Eigen::VectorXd ParameterSpace::to_natural(const Eigen::VectorXd& free_est) const {
    Eigen::VectorXd v(free_est.size());
    for (int j = 0; j < free_est.size(); ++j) {
        const Parameter& p = params_[static_cast<std::size_t>(free_[static_cast<std::size_t>(j)])];
        v[j] = p.log10_scale ? std::pow(10.0, free_est[j]) : free_est[j];
    }
    return v;
}

Eigen::VectorXd ParameterSpace::from_natural(const Eigen::VectorXd& free_nat) const {
    Eigen::VectorXd v(free_nat.size());
    for (int j = 0; j < free_nat.size(); ++j) {
        const Parameter& p = params_[static_cast<std::size_t>(free_[static_cast<std::size_t>(j)])];
        if (p.log10_scale) {
            if (free_nat[j] <= 0.0)
                throw DomainError("log10-scaled parameter '" + p.name +
                                  "' requires a positive natural-scale value");
            v[j] = std::log10(free_nat[j]);
        } else {
            v[j] = free_nat[j];
        }
    }
    return v;
}

Eigen::VectorXd ParameterSpace::natural_full(const Eigen::VectorXd& free_est) const {
    Eigen::VectorXd v(size());
    int j = 0;
    for (int i = 0; i < size(); ++i) {
        const Parameter& p = params_[static_cast<std::size_t>(i)];
        const double est = p.fixed ? p.value : free_est[j++];
        v[i] = p.log10_scale ? std::pow(10.0, est) : est;
    }
    return v;
}

double ParameterSpace::scale_factor(int free_position, double nat_value) const {
    const Parameter& p = params_[static_cast<std::size_t>(free_[static_cast<std::size_t>(free_position)])];
    return p.log10_scale ? kLn10 * nat_value : 1.0;
}

void ParameterSpace::fix(const std::string& name, double est_value) {
    const int i = index_of(name);
    if (i < 0) throw SchemaError("unknown parameter '" + name + "'");
    Parameter& p = params_[static_cast<std::size_t>(i)];
    if (p.fixed) throw SchemaError("parameter '" + name + "' is already fixed");
    p.fixed = true;
    p.value = est_value;
    free_.erase(std::remove(free_.begin(), free_.end(), i), free_.end());
}

void ParameterSpace::validate() const {
    for (const auto& p : params_) {
        if (!p.fixed && !(p.lower < p.upper))
            throw SchemaError("parameter '" + p.name + "': lower bound must be below upper bound");
        if (!std::isfinite(p.value))
            throw SchemaError("parameter '" + p.name + "': non-finite value");
        if (p.prior && !(p.prior->sd > 0.0))
            throw SchemaError("parameter '" + p.name + "': prior sd must be positive");
    }
}

// ---------------------------------------------------------------------------
// DynamicModel

int DynamicModel::observable_index(const std::string& id) const {
    for (std::size_t i = 0; i < observables_.size(); ++i)
        if (observables_[i].id == id) return static_cast<int>(i);
    return -1;
}

int DynamicModel::condition_index(const std::string& id) const {
    for (std::size_t i = 0; i < conditions_.size(); ++i)
        if (conditions_[i].id == id) return static_cast<int>(i);
    return -1;
}

std::vector<double> DynamicModel::make_env(const Eigen::VectorXd& theta_nat_full,
                                           const Condition& condition) const {
    std::vector<double> env(static_cast<std::size_t>(symbols_.size()), 0.0);
    for (int i = 0; i < space_.size(); ++i)
        env[static_cast<std::size_t>(param_symbol_base_ + i)] = theta_nat_full[i];
    for (std::size_t i = 0; i < input_names_.size(); ++i)
        env[static_cast<std::size_t>(input_symbol_base_) + i] = condition.inputs[i];
    return env;
}

Eigen::VectorXd DynamicModel::initial_state(std::vector<double>& env) const {
    Eigen::VectorXd x0(n_states());
    for (int i = 0; i < n_states(); ++i) x0[i] = states_[static_cast<std::size_t>(i)].init->eval(env);
    return x0;
}

void DynamicModel::compile() {
    const int nx = n_states();
    const int nf = space_.n_free();
    const int nobs = static_cast<int>(observables_.size());
    derivs_ = CompiledDerivs{};
    derivs_.dfdx.assign(static_cast<std::size_t>(nx), {});
    derivs_.dfdp.assign(static_cast<std::size_t>(nx), {});
    derivs_.dx0dp.assign(static_cast<std::size_t>(nx), {});
    for (int i = 0; i < nx; ++i) {
        auto& row_x = derivs_.dfdx[static_cast<std::size_t>(i)];
        auto& row_p = derivs_.dfdp[static_cast<std::size_t>(i)];
        auto& row_0 = derivs_.dx0dp[static_cast<std::size_t>(i)];
        for (int j = 0; j < nx; ++j) row_x.push_back(rates_[static_cast<std::size_t>(i)]->derivative(state_symbol(j)));
        for (int j = 0; j < nf; ++j) {
            const int ps = param_symbol(space_.free_param_index(j));
            row_p.push_back(rates_[static_cast<std::size_t>(i)]->derivative(ps));
            row_0.push_back(states_[static_cast<std::size_t>(i)].init->derivative(ps));
        }
    }
    derivs_.dgdx.assign(static_cast<std::size_t>(nobs), {});
    derivs_.dgdp.assign(static_cast<std::size_t>(nobs), {});
    derivs_.dedx.assign(static_cast<std::size_t>(nobs), {});
    derivs_.dedp.assign(static_cast<std::size_t>(nobs), {});
    for (int o = 0; o < nobs; ++o) {
        auto& obs = observables_[static_cast<std::size_t>(o)];
        for (int j = 0; j < nx; ++j) derivs_.dgdx[static_cast<std::size_t>(o)].push_back(obs.g->derivative(state_symbol(j)));
        for (int j = 0; j < nf; ++j)
            derivs_.dgdp[static_cast<std::size_t>(o)].push_back(
                obs.g->derivative(param_symbol(space_.free_param_index(j))));
        if (obs.error) {
            bool dep = false;
            for (int j = 0; j < nx; ++j) {
                derivs_.dedx[static_cast<std::size_t>(o)].push_back(obs.error->derivative(state_symbol(j)));
                dep = dep || obs.error->depends_on(state_symbol(j));
            }
            for (int j = 0; j < nf; ++j) {
                const int ps = param_symbol(space_.free_param_index(j));
                derivs_.dedp[static_cast<std::size_t>(o)].push_back(obs.error->derivative(ps));
                dep = dep || obs.error->depends_on(ps);
            }
            obs.error_theta_dependent = dep;
        }
    }
}

DynamicModel DynamicModel::with_fixed(const std::string& name, double est_value) const {
    DynamicModel m = *this;
    m.space_.fix(name, est_value);
    m.compile();
    return m;
}

DynamicModel DynamicModel::with_sigma_from_data() const {
    DynamicModel m = *this;
    for (auto& obs : m.observables_) {
        obs.error = nullptr;
        obs.sigma_from_data = true;
        obs.error_theta_dependent = false;
    }
    m.compile();
    return m;
}

DynamicModel DynamicModel::apply_positive_control(const PositiveControlTransform& t) const {
    const int target = space_.index_of(t.target);
    if (target < 0) throw SchemaError("positive control: unknown parameter '" + t.target + "'");
    const Parameter& orig = space_.param(target);
    if (orig.fixed) throw SchemaError("positive control: parameter '" + t.target + "' is fixed");
    if (space_.index_of(t.factor_a) >= 0 || space_.index_of(t.factor_b) >= 0 ||
        symbols_.find(t.factor_a) || symbols_.find(t.factor_b))
        throw SchemaError("positive control: factor name already in use");

    DynamicModel m;
    m.name_ = name_ + "_pc_" + t.target;
    m.input_names_ = input_names_;
    m.conditions_ = conditions_;

    // Factor a takes the target's slot, factor b is appended. On the log10
    // scale each factor starts at half the target's value so the product
    // reproduces the original; on a linear scale b starts at 1.
    Parameter fa = orig;
    fa.name = t.factor_a;
    Parameter fb = orig;
    fb.name = t.factor_b;
    if (orig.log10_scale) {
        fa.value = orig.value / 2.0;
        fb.value = orig.value / 2.0;
    } else {
        fa.value = orig.value;
        fb.value = 1.0;
    }
    fa.prior.reset();
    fb.prior.reset();
    for (int i = 0; i < space_.size(); ++i) {
        if (i == target) {
            m.space_.add(fa);
        } else {
            m.space_.add(space_.param(i));
        }
    }
    m.space_.add(fb);

    // Rebuild the symbol table: states, parameters (new order), inputs, time.
    for (const auto& s : states_) {
        StateDef sd;
        sd.name = s.name;
        sd.symbol = m.symbols_.declare(s.name, SymbolKind::State);
        m.states_.push_back(sd);
    }
    m.param_symbol_base_ = m.symbols_.size();
    for (const auto& p : m.space_.params()) m.symbols_.declare(p.name, SymbolKind::Parameter);
    m.input_symbol_base_ = m.symbols_.size();
    for (const auto& u : input_names_) m.symbols_.declare(u, SymbolKind::Input);
    m.time_symbol_ = m.symbols_.declare("t", SymbolKind::Time);

    std::unordered_map<int, ExprPtr> repl;
    for (int id = 0; id < symbols_.size(); ++id) {
        const SymbolInfo& s = symbols_.at(id);
        if (id == param_symbol(target)) {
            repl[id] = Expr::mul(Expr::symbol_ref(*m.symbols_.find(t.factor_a)),
                                 Expr::symbol_ref(*m.symbols_.find(t.factor_b)));
        } else {
            repl[id] = Expr::symbol_ref(*m.symbols_.find(s.name));
        }
    }

    for (std::size_t i = 0; i < states_.size(); ++i)
        m.states_[i].init = states_[i].init->substitute(repl);
    for (const auto& r : rates_) m.rates_.push_back(r->substitute(repl));
    for (const auto& o : observables_) {
        ObservableDef od = o;
        od.g = o.g->substitute(repl);
        od.error = o.error ? o.error->substitute(repl) : nullptr;
        m.observables_.push_back(od);
    }
    m.space_.validate();
    m.compile();
    return m;
}

// ---------------------------------------------------------------------------
// model file loading

namespace {

using nlohmann::json;

double natural_to_est(double nat, bool log10_scale, const std::string& what) {
    if (!log10_scale) return nat;
    if (!(nat > 0.0))
        throw SchemaError(what + ": log10-scaled value must be positive, got " +
                          std::to_string(nat));
    return std::log10(nat);
}

ExprPtr parse_checked(const std::string& src, const SymbolTable& table, const std::string& where) {
    try {
        return parse(src, table);
    } catch (const ParseError& e) {
        throw SchemaError(where + ": " + e.what());
    }
}

}  // namespace

DynamicModel model_from_json_text(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw SchemaError(origin + ": invalid JSON: " + e.what());
    }

    DynamicModel m;
    try {
        m.name_ = j.value("name", std::string("model"));

        if (!j.contains("states") || !j["states"].is_array() || j["states"].empty())
            throw SchemaError("missing 'states' array");
        if (!j.contains("parameters") || !j["parameters"].is_array())
            throw SchemaError("missing 'parameters' array");
        if (!j.contains("rates") || !j["rates"].is_object())
            throw SchemaError("missing 'rates' object");
        if (!j.contains("observables") || !j["observables"].is_array() || j["observables"].empty())
            throw SchemaError("missing 'observables' array");

        for (const auto& sp : j["parameters"]) {
            Parameter p;
            p.name = sp.at("name").get<std::string>();
            const std::string scale = sp.value("scale", std::string("log10"));
            if (scale == "log10")
                p.log10_scale = true;
            else if (scale == "linear")
                p.log10_scale = false;
            else
                throw SchemaError("parameter '" + p.name + "': unknown scale '" + scale + "'");
            p.value = natural_to_est(sp.at("init").get<double>(), p.log10_scale,
                                     "parameter '" + p.name + "' init");
            if (sp.contains("lb"))
                p.lower = natural_to_est(sp["lb"].get<double>(), p.log10_scale,
                                         "parameter '" + p.name + "' lb");
            if (sp.contains("ub"))
                p.upper = natural_to_est(sp["ub"].get<double>(), p.log10_scale,
                                         "parameter '" + p.name + "' ub");
            p.fixed = sp.value("fixed", false);
            if (sp.contains("prior")) {
                GaussianPrior prior;
                prior.mean = sp["prior"].at("mean").get<double>();
                prior.sd = sp["prior"].at("sd").get<double>();
                p.prior = prior;
            }
            if (!p.fixed && (p.value < p.lower || p.value > p.upper))
                throw SchemaError("parameter '" + p.name + "': init outside bounds");
            m.space_.add(p);
        }

        for (const auto& ss : j["states"]) {
            StateDef sd;
            sd.name = ss.at("name").get<std::string>();
            sd.symbol = m.symbols_.declare(sd.name, SymbolKind::State);
            m.states_.push_back(sd);
        }
        m.param_symbol_base_ = m.symbols_.size();
        for (const auto& p : m.space_.params()) m.symbols_.declare(p.name, SymbolKind::Parameter);
        if (j.contains("inputs"))
            for (const auto& u : j["inputs"]) m.input_names_.push_back(u.get<std::string>());
        m.input_symbol_base_ = m.symbols_.size();
        for (const auto& u : m.input_names_) m.symbols_.declare(u, SymbolKind::Input);
        m.time_symbol_ = m.symbols_.declare("t", SymbolKind::Time);

        // Initial values may reference parameters only.
        SymbolTable init_table;
        for (const auto& p : m.space_.params()) init_table.declare(p.name, SymbolKind::Parameter);
        for (std::size_t i = 0; i < m.states_.size(); ++i) {
            const std::string src = j["states"][i].at("init").get<std::string>();
            ExprPtr probe = parse_checked(src, init_table, "state '" + m.states_[i].name + "' init");
            (void)probe;
            // Reparse against the full table so symbol ids match the env.
            m.states_[i].init = parse_checked(src, m.symbols_, "state '" + m.states_[i].name + "' init");
        }

        for (const auto& sd : m.states_) {
            if (!j["rates"].contains(sd.name))
                throw SchemaError("missing rate expression for state '" + sd.name + "'");
            m.rates_.push_back(parse_checked(j["rates"][sd.name].get<std::string>(), m.symbols_,
                                             "rate of '" + sd.name + "'"));
        }
        if (j["rates"].size() != m.states_.size())
            throw SchemaError("rates must cover exactly the declared states");

        for (const auto& so : j["observables"]) {
            ObservableDef od;
            od.id = so.at("id").get<std::string>();
            if (m.observable_index(od.id) >= 0)
                throw SchemaError("duplicate observable '" + od.id + "'");
            od.g = parse_checked(so.at("g").get<std::string>(), m.symbols_,
                                 "observable '" + od.id + "'");
            const std::string err = so.at("error").get<std::string>();
            if (err == "data") {
                od.sigma_from_data = true;
            } else {
                od.error = parse_checked(err, m.symbols_, "error model of '" + od.id + "'");
            }
            m.observables_.push_back(od);
        }

        if (j.contains("conditions") && !j["conditions"].empty()) {
            for (const auto& sc : j["conditions"]) {
                Condition c;
                c.id = sc.at("id").get<std::string>();
                c.inputs.assign(m.input_names_.size(), 0.0);
                if (sc.contains("inputs")) {
                    for (const auto& [k, v] : sc["inputs"].items()) {
                        auto it = std::find(m.input_names_.begin(), m.input_names_.end(), k);
                        if (it == m.input_names_.end())
                            throw SchemaError("condition '" + c.id + "': unknown input '" + k + "'");
                        c.inputs[static_cast<std::size_t>(it - m.input_names_.begin())] =
                            v.get<double>();
                    }
                }
                if (m.condition_index(c.id) >= 0)
                    throw SchemaError("duplicate condition '" + c.id + "'");
                m.conditions_.push_back(c);
            }
        } else {
            Condition c;
            c.id = "default";
            c.inputs.assign(m.input_names_.size(), 0.0);
            m.conditions_.push_back(c);
        }
    } catch (const json::exception& e) {
        throw SchemaError(origin + ": " + e.what());
    }

    m.space_.validate();
    m.compile();
    return m;
}

DynamicModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open model file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_json_text(ss.str(), path);
}

// ---------------------------------------------------------------------------
// data files

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    for (auto& f : out) {
        while (!f.empty() && std::isspace(static_cast<unsigned char>(f.front()))) f.erase(f.begin());
        while (!f.empty() && std::isspace(static_cast<unsigned char>(f.back()))) f.pop_back();
    }
    return out;
}

double parse_double_field(const std::string& s, const std::string& what, int line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw SchemaError("data line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
    }
}

}  // namespace

Dataset data_from_csv_text(const std::string& text, const DynamicModel& model,
                           const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw SchemaError(origin + ": empty data file");
    auto header = split_csv_line(line);
    const bool has_sigma = header.size() == 5;
    if (!(header.size() == 4 || has_sigma) || header[0] != "observable" ||
        header[1] != "condition" || header[2] != "time" || header[3] != "value" ||
        (has_sigma && header[4] != "sigma"))
        throw SchemaError(origin + ": expected header observable,condition,time,value[,sigma]");

    std::vector<DataPoint> points;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw SchemaError(origin + ": line " + std::to_string(line_no) + ": expected " +
                              std::to_string(header.size()) + " fields");
        DataPoint p;
        p.observable = fields[0];
        p.condition = fields[1];
        p.observable_idx = model.observable_index(p.observable);
        if (p.observable_idx < 0)
            throw SchemaError(origin + ": line " + std::to_string(line_no) +
                              ": unknown observable '" + p.observable + "'");
        p.condition_idx = model.condition_index(p.condition);
        if (p.condition_idx < 0)
            throw SchemaError(origin + ": line " + std::to_string(line_no) +
                              ": unknown condition '" + p.condition + "'");
        p.time = parse_double_field(fields[2], "time", line_no);
        p.value = parse_double_field(fields[3], "value", line_no);
        if (has_sigma && !fields[4].empty()) {
            const double s = parse_double_field(fields[4], "sigma", line_no);
            if (!(s > 0.0))
                throw SchemaError(origin + ": line " + std::to_string(line_no) +
                                  ": sigma must be positive");
            p.sigma = s;
        }
        if (!std::isfinite(p.time) || !std::isfinite(p.value))
            throw SchemaError(origin + ": line " + std::to_string(line_no) + ": non-finite entry");
        points.push_back(std::move(p));
    }
    if (points.empty()) throw SchemaError(origin + ": data file contains no rows");
    return Dataset(std::move(points));
}

Dataset load_data(const std::string& path, const DynamicModel& model) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open data file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return data_from_csv_text(ss.str(), model, path);
}

void write_data_csv(const std::string& path, const Dataset& data) {
    std::ofstream out(path);
    if (!out) throw SchemaError("cannot write data file '" + path + "'");
    out << "observable,condition,time,value,sigma\n";
    char buf[64];
    for (const auto& p : data.points()) {
        out << p.observable << ',' << p.condition << ',';
        std::snprintf(buf, sizeof buf, "%.17g", p.time);
        out << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", p.value);
        out << buf << ',';
        if (p.sigma) {
            std::snprintf(buf, sizeof buf, "%.17g", *p.sigma);
            out << buf;
        }
        out << '\n';
    }
}

std::pair<double, double> Dataset::time_span() const {
    double lo = points_.front().time, hi = points_.front().time;
    for (const auto& p : points_) {
        lo = std::min(lo, p.time);
        hi = std::max(hi, p.time);
    }
    return {lo, hi};
}

}  // namespace itrp
