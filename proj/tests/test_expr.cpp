#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "itrp/expr.hpp"
#include "itrp/rng.hpp"

using namespace itrp;

namespace {

SymbolTable two_symbols() {
    SymbolTable t;
    t.declare("k1", SymbolKind::Parameter);
    t.declare("A", SymbolKind::State);
    return t;
}

double eval_at(const ExprPtr& e, std::vector<double> env) { return e->eval(env); }

}  // namespace

TEST_CASE("products parse and evaluate") {
    SymbolTable t = two_symbols();
    ExprPtr e = parse("k1*A", t);
    CHECK(e->kind == ExprKind::Mul);
    CHECK(eval_at(e, {0.1, 1.0}) == doctest::Approx(0.1));

    SymbolTable t2;
    t2.declare("s", SymbolKind::Parameter);
    t2.declare("B", SymbolKind::State);
    ExprPtr g = parse("s*B", t2);
    CHECK(g->kind == ExprKind::Mul);
    CHECK(eval_at(g, {2.0, 0.5}) == doctest::Approx(1.0));
}

TEST_CASE("syntax errors carry positions") {
    SymbolTable t = two_symbols();
    CHECK_THROWS_AS(parse("k1*", t), ParseError);
    try {
        parse("k1*", t);
    } catch (const ParseError& e) {
        CHECK(e.position == 3);
    }
    CHECK_THROWS_AS(parse("", t), ParseError);
    CHECK_THROWS_AS(parse("(k1", t), ParseError);
    CHECK_THROWS_AS(parse("2 + + 3", t), ParseError);
    CHECK_THROWS_AS(parse("k1 A", t), ParseError);
}

TEST_CASE("unknown symbols are rejected with their name") {
    SymbolTable t = two_symbols();
    CHECK_THROWS_AS(parse("k1*Bee", t), UnknownSymbolError);
    try {
        parse("k1*Bee", t);
    } catch (const UnknownSymbolError& e) {
        CHECK(e.symbol == "Bee");
    }
}

TEST_CASE("evaluation domain errors") {
    SymbolTable t;
    t.declare("x", SymbolKind::Parameter);
    CHECK_THROWS_AS(eval_at(parse("log(x)", t), {0.0}), DomainError);
    CHECK_THROWS_AS(eval_at(parse("log(x)", t), {-1.0}), DomainError);
    CHECK_THROWS_AS(eval_at(parse("log10(x)", t), {0.0}), DomainError);
    CHECK_THROWS_AS(eval_at(parse("sqrt(x)", t), {-1.0}), DomainError);
    CHECK_THROWS_AS(eval_at(parse("1/x", t), {0.0}), DomainError);
    CHECK_THROWS_AS(eval_at(parse("x^x", t), {-1.5}), DomainError);
    CHECK(eval_at(parse("sqrt(x)", t), {4.0}) == doctest::Approx(2.0));
}

TEST_CASE("precedence and associativity") {
    SymbolTable t;
    t.declare("x", SymbolKind::Parameter);
    CHECK(eval_at(parse("-x^2", t), {3.0}) == doctest::Approx(-9.0));
    CHECK(eval_at(parse("2^3^2", t), {0.0}) == doctest::Approx(512.0));
    CHECK(eval_at(parse("-2^2", t), {0.0}) == doctest::Approx(-4.0));
    CHECK(eval_at(parse("1-2-3", t), {0.0}) == doctest::Approx(-4.0));
    CHECK(eval_at(parse("6/3/2", t), {0.0}) == doctest::Approx(1.0));
    CHECK(eval_at(parse("2+3*4", t), {0.0}) == doctest::Approx(14.0));
    CHECK(eval_at(parse("pow(x,3)", t), {2.0}) == doctest::Approx(8.0));
    CHECK(eval_at(parse("(2+3)*4", t), {0.0}) == doctest::Approx(20.0));
}

TEST_CASE("simple derivatives simplify") {
    SymbolTable t = two_symbols();
    ExprPtr e = parse("k1*A", t);
    CHECK(e->derivative(t.find("k1")->id)->to_string() == "A");
    CHECK(e->derivative(t.find("A")->id)->to_string() == "k1");
}

TEST_CASE("derivative of exp(2*x) at 0 is 2") {
    SymbolTable t;
    t.declare("x", SymbolKind::Parameter);
    ExprPtr e = parse("exp(2*x)", t);
    ExprPtr d = e->derivative(0);
    const double sym = eval_at(d, {0.0});
    const double h = 1e-6;
    const double fd = (eval_at(e, {h}) - eval_at(e, {-h})) / (2.0 * h);
    CHECK(sym == doctest::Approx(2.0));
    CHECK(std::abs(sym - fd) <= 1e-6 * std::max(1.0, std::abs(sym)));
}

TEST_CASE("depends_on tracks symbols") {
    SymbolTable t = two_symbols();
    ExprPtr e = parse("k1*A + 1", t);
    CHECK(e->depends_on(0));
    CHECK(e->depends_on(1));
    CHECK_FALSE(parse("k1+1", t)->depends_on(1));
}

TEST_CASE("substitute rewrites symbol references") {
    SymbolTable t = two_symbols();
    SymbolTable t2;
    t2.declare("u", SymbolKind::Parameter);
    t2.declare("v", SymbolKind::Parameter);
    t2.declare("A", SymbolKind::State);

    ExprPtr e = parse("k1*A", t);
    std::unordered_map<int, ExprPtr> repl;
    repl[0] = Expr::mul(Expr::symbol_ref(*t2.find("u")), Expr::symbol_ref(*t2.find("v")));
    repl[1] = Expr::symbol_ref(*t2.find("A"));
    ExprPtr r = e->substitute(repl);
    CHECK(eval_at(r, {2.0, 3.0, 0.5}) == doctest::Approx(3.0));
}

namespace {

// Random expression over the given symbols, depth-limited, biased towards
// numerically tame shapes.
ExprPtr random_expr(Rng& rng, const SymbolTable& table, int depth) {
    if (depth == 0 || rng.uniform01() < 0.25) {
        if (rng.uniform01() < 0.5) return Expr::constant(rng.uniform(0.5, 2.0));
        const int id = static_cast<int>(rng.uniform01() * table.size());
        return Expr::symbol_ref(table.at(std::min(id, table.size() - 1)));
    }
    const double pick = rng.uniform01();
    if (pick < 0.18) return Expr::add(random_expr(rng, table, depth - 1), random_expr(rng, table, depth - 1));
    if (pick < 0.36) return Expr::sub(random_expr(rng, table, depth - 1), random_expr(rng, table, depth - 1));
    if (pick < 0.54) return Expr::mul(random_expr(rng, table, depth - 1), random_expr(rng, table, depth - 1));
    if (pick < 0.66) return Expr::div(random_expr(rng, table, depth - 1), random_expr(rng, table, depth - 1));
    if (pick < 0.74) return Expr::pow(random_expr(rng, table, depth - 1), Expr::constant(2.0));
    if (pick < 0.80) return Expr::pow(random_expr(rng, table, depth - 1), Expr::constant(1.5));
    if (pick < 0.86) return Expr::neg(random_expr(rng, table, depth - 1));
    if (pick < 0.92) return Expr::call(Func::Exp, random_expr(rng, table, depth - 1));
    if (pick < 0.96) return Expr::call(Func::Log, random_expr(rng, table, depth - 1));
    return Expr::call(Func::Sqrt, random_expr(rng, table, depth - 1));
}

bool finite_eval(const ExprPtr& e, const std::vector<double>& env, double& out) {
    try {
        out = e->eval(env);
    } catch (const DomainError&) {
        return false;
    }
    return std::isfinite(out) && std::abs(out) < 1e12;
}

}  // namespace

TEST_CASE("round trip: print then reparse evaluates bit-identically") {
    SymbolTable t;
    t.declare("x", SymbolKind::Parameter);
    t.declare("y", SymbolKind::Parameter);
    t.declare("z", SymbolKind::State);

    Rng rng(42);
    int checked = 0;
    for (int i = 0; i < 60; ++i) {
        ExprPtr e = random_expr(rng, t, 5);
        ExprPtr r = parse(e->to_string(), t);
        for (int k = 0; k < 100; ++k) {
            std::vector<double> env{rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0),
                                    rng.uniform(0.5, 2.0)};
            double a = 0.0;
            double b = 0.0;
            if (!finite_eval(e, env, a)) continue;
            REQUIRE(finite_eval(r, env, b));
            CHECK(std::memcmp(&a, &b, sizeof a) == 0);
            ++checked;
        }
    }
    CHECK(checked > 2000);
}

TEST_CASE("derivatives match central finite differences on random trees") {
    SymbolTable t;
    t.declare("x", SymbolKind::Parameter);
    t.declare("y", SymbolKind::Parameter);

    Rng rng(7);
    int checked = 0;
    for (int i = 0; i < 80; ++i) {
        ExprPtr e = random_expr(rng, t, 4);
        for (int wrt = 0; wrt < 2; ++wrt) {
            ExprPtr d = e->derivative(wrt);
            int good = 0;
            for (int k = 0; k < 60 && good < 20; ++k) {
                std::vector<double> env{rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0)};
                double sym = 0.0;
                if (!finite_eval(d, env, sym)) continue;

                const double h = 1e-6 * std::max(1.0, std::abs(env[static_cast<std::size_t>(wrt)]));
                std::vector<double> lo = env;
                std::vector<double> hi = env;
                lo[static_cast<std::size_t>(wrt)] -= h;
                hi[static_cast<std::size_t>(wrt)] += h;
                double flo = 0.0;
                double fhi = 0.0;
                if (!finite_eval(e, lo, flo) || !finite_eval(e, hi, fhi)) continue;

                const double fd = (fhi - flo) / (2.0 * h);
                const double tol = 1e-6 * std::max({1.0, std::abs(sym), std::abs(fd)});
                CHECK(std::abs(sym - fd) <= tol);
                ++good;
                ++checked;
            }
        }
    }
    CHECK(checked > 1500);
}

TEST_CASE("constants print and reparse exactly") {
    SymbolTable t;
    ExprPtr e = Expr::constant(0.1);
    ExprPtr r = parse(e->to_string(), t);
    double a = e->eval(std::vector<double>{});
    double b = r->eval(std::vector<double>{});
    CHECK(std::memcmp(&a, &b, sizeof a) == 0);
}
