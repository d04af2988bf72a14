#include "itrp/expr.hpp"

#include <cassert>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace itrp {

int SymbolTable::declare(const std::string& name, SymbolKind kind) {
    if (index_.count(name)) throw SchemaError("duplicate symbol '" + name + "'");
    const int id = static_cast<int>(symbols_.size());
    symbols_.push_back(SymbolInfo{name, kind, id});
    index_.emplace(name, id);
    return id;
}

const SymbolInfo* SymbolTable::find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    return it == index_.end() ? nullptr : &symbols_[static_cast<std::size_t>(it->second)];
}

// ---------------------------------------------------------------------------
// construction

namespace {

ExprPtr make_node(ExprKind k) {
    auto n = std::make_shared<Expr>();
    n->kind = k;
    return n;
}

bool is_const(const ExprPtr& e, double v) {
    return e->kind == ExprKind::Constant && e->value == v;
}

}  // namespace

ExprPtr Expr::constant(double v) {
    auto n = std::make_shared<Expr>();
    n->kind = ExprKind::Constant;
    n->value = v;
    return n;
}

ExprPtr Expr::symbol_ref(const SymbolInfo& s) {
    auto n = std::make_shared<Expr>();
    n->kind = ExprKind::Symbol;
    n->symbol = s.id;
    n->symbol_name = s.name;
    return n;
}

ExprPtr Expr::neg(ExprPtr e) {
    if (is_const(e, 0.0)) return e;
    auto n = std::make_shared<Expr>();
    n->kind = ExprKind::Neg;
    n->a = std::move(e);
    return n;
}

ExprPtr Expr::add(ExprPtr l, ExprPtr r) {
    if (is_const(l, 0.0)) return r;
    if (is_const(r, 0.0)) return l;
    auto n = std::make_shared<Expr>();
    n->kind = ExprKind::Add;
    n->a = std::move(l);
    n->b = std::move(r);
    return n;
}

ExprPtr Expr::sub(ExprPtr l, ExprPtr r) {
    if (is_const(r, 0.0)) return l;
    if (is_const(l, 0.0)) return neg(std::move(r));
    auto n = std::make_shared<Expr>();
    n->kind = ExprKind::Sub;
    n->a = std::move(l);
    n->b = std::move(r);
    return n;
}

ExprPtr Expr::mul(ExprPtr l, ExprPtr r) {
    if (is_const(l, 0.0)) return l;
    if (is_const(r, 0.0)) return r;
    if (is_const(l, 1.0)) return r;
    if (is_const(r, 1.0)) return l;
    auto n = std::make_shared<Expr>();
    n->kind = ExprKind::Mul;
    n->a = std::move(l);
    n->b = std::move(r);
    return n;
}

ExprPtr Expr::div(ExprPtr l, ExprPtr r) {
    if (is_const(l, 0.0)) return l;
    if (is_const(r, 1.0)) return l;
    auto n = std::make_shared<Expr>();
    n->kind = ExprKind::Div;
    n->a = std::move(l);
    n->b = std::move(r);
    return n;
}

ExprPtr Expr::pow(ExprPtr base, ExprPtr exponent) {
    auto n = std::make_shared<Expr>();
    n->kind = ExprKind::Pow;
    n->a = std::move(base);
    n->b = std::move(exponent);
    return n;
}

ExprPtr Expr::call(Func f, ExprPtr arg) {
    auto n = std::make_shared<Expr>();
    n->kind = ExprKind::Call;
    n->func = f;
    n->a = std::move(arg);
    return n;
}

// ---------------------------------------------------------------------------
// evaluation

double Expr::eval(std::span<const double> env) const {
    switch (kind) {
        case ExprKind::Constant:
            return value;
        case ExprKind::Symbol:
            assert(symbol >= 0 && static_cast<std::size_t>(symbol) < env.size());
            return env[static_cast<std::size_t>(symbol)];
        case ExprKind::Neg:
            return -a->eval(env);
        case ExprKind::Add:
            return a->eval(env) + b->eval(env);
        case ExprKind::Sub:
            return a->eval(env) - b->eval(env);
        case ExprKind::Mul:
            return a->eval(env) * b->eval(env);
        case ExprKind::Div: {
            const double den = b->eval(env);
            if (den == 0.0) throw DomainError("division by zero in '" + to_string() + "'");
            return a->eval(env) / den;
        }
        case ExprKind::Pow: {
            const double base = a->eval(env);
            const double exponent = b->eval(env);
            const double r = std::pow(base, exponent);
            if (!std::isfinite(r))
                throw DomainError("pow domain error in '" + to_string() + "'");
            return r;
        }
        case ExprKind::Call: {
            const double x = a->eval(env);
            switch (func) {
                case Func::Exp:
                    return std::exp(x);
                case Func::Log:
                    if (x <= 0.0) throw DomainError("log of non-positive argument");
                    return std::log(x);
                case Func::Log10:
                    if (x <= 0.0) throw DomainError("log10 of non-positive argument");
                    return std::log10(x);
                case Func::Sqrt:
                    if (x < 0.0) throw DomainError("sqrt of negative argument");
                    return std::sqrt(x);
            }
        }
    }
    throw Error("corrupt expression node");
}

bool Expr::depends_on(int symbol_id) const {
    switch (kind) {
        case ExprKind::Constant:
            return false;
        case ExprKind::Symbol:
            return symbol == symbol_id;
        default:
            if (a && a->depends_on(symbol_id)) return true;
            return b && b->depends_on(symbol_id);
    }
}

// ---------------------------------------------------------------------------
// differentiation

namespace {

bool integer_constant(const ExprPtr& e, double* out) {
    if (e->kind != ExprKind::Constant) return false;
    if (e->value != std::floor(e->value) || !std::isfinite(e->value)) return false;
    *out = e->value;
    return true;
}

}  // namespace

ExprPtr Expr::derivative(int s) const {
    switch (kind) {
        case ExprKind::Constant:
            return constant(0.0);
        case ExprKind::Symbol:
            return constant(symbol == s ? 1.0 : 0.0);
        case ExprKind::Neg:
            return neg(a->derivative(s));
        case ExprKind::Add:
            return add(a->derivative(s), b->derivative(s));
        case ExprKind::Sub:
            return sub(a->derivative(s), b->derivative(s));
        case ExprKind::Mul:
            return add(mul(a->derivative(s), b), mul(a, b->derivative(s)));
        case ExprKind::Div:
            // (a'b - ab') / b^2
            return div(sub(mul(a->derivative(s), b), mul(a, b->derivative(s))),
                       mul(b, b));
        case ExprKind::Pow: {
            double n = 0.0;
            if (integer_constant(b, &n)) {
                // n * a^(n-1) * a'
                return mul(mul(constant(n), pow(a, constant(n - 1.0))), a->derivative(s));
            }
            // a^b = exp(b*log(a)):  a^b * (b'*log(a) + b*a'/a)
            if (!b->depends_on(s) && !a->depends_on(s)) return constant(0.0);
            ExprPtr self = pow(a, b);
            ExprPtr term1 = mul(b->derivative(s), call(Func::Log, a));
            ExprPtr term2 = div(mul(b, a->derivative(s)), a);
            return mul(self, add(term1, term2));
        }
        case ExprKind::Call: {
            ExprPtr da = a->derivative(s);
            switch (func) {
                case Func::Exp:
                    return mul(call(Func::Exp, a), da);
                case Func::Log:
                    return div(da, a);
                case Func::Log10:
                    // 1 / (x ln 10)
                    return div(da, mul(a, constant(std::log(10.0))));
                case Func::Sqrt:
                    return div(da, mul(constant(2.0), call(Func::Sqrt, a)));
            }
        }
    }
    throw Error("corrupt expression node");
}

ExprPtr Expr::substitute(const std::unordered_map<int, ExprPtr>& repl) const {
    switch (kind) {
        case ExprKind::Constant:
            return constant(value);
        case ExprKind::Symbol: {
            auto it = repl.find(symbol);
            if (it == repl.end())
                throw Error("substitute: no mapping for symbol '" + symbol_name + "'");
            return it->second;
        }
        case ExprKind::Neg:
            return neg(a->substitute(repl));
        case ExprKind::Add:
            return add(a->substitute(repl), b->substitute(repl));
        case ExprKind::Sub:
            return sub(a->substitute(repl), b->substitute(repl));
        case ExprKind::Mul:
            return mul(a->substitute(repl), b->substitute(repl));
        case ExprKind::Div:
            return div(a->substitute(repl), b->substitute(repl));
        case ExprKind::Pow:
            return pow(a->substitute(repl), b->substitute(repl));
        case ExprKind::Call:
            return call(func, a->substitute(repl));
    }
    throw Error("corrupt expression node");
}

// ---------------------------------------------------------------------------
// printing

std::string Expr::to_string() const {
    switch (kind) {
        case ExprKind::Constant: {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", value);
            return buf;
        }
        case ExprKind::Symbol:
            return symbol_name;
        case ExprKind::Neg:
            return "(-" + a->to_string() + ")";
        case ExprKind::Add:
            return "(" + a->to_string() + "+" + b->to_string() + ")";
        case ExprKind::Sub:
            return "(" + a->to_string() + "-" + b->to_string() + ")";
        case ExprKind::Mul:
            return "(" + a->to_string() + "*" + b->to_string() + ")";
        case ExprKind::Div:
            return "(" + a->to_string() + "/" + b->to_string() + ")";
        case ExprKind::Pow:
            return "(" + a->to_string() + "^" + b->to_string() + ")";
        case ExprKind::Call: {
            const char* name = "";
            switch (func) {
                case Func::Exp: name = "exp"; break;
                case Func::Log: name = "log"; break;
                case Func::Log10: name = "log10"; break;
                case Func::Sqrt: name = "sqrt"; break;
            }
            return std::string(name) + "(" + a->to_string() + ")";
        }
    }
    return "?";
}

// ---------------------------------------------------------------------------
// parser: recursive descent over a token stream

namespace {

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };

struct Token {
    Tok type;
    std::size_t pos;
    double number = 0.0;
    std::string text;
};

class Lexer {
  public:
    explicit Lexer(std::string_view src) : src_(src) { advance(); }

    const Token& peek() const { return current_; }

    Token take() {
        Token t = current_;
        advance();
        return t;
    }

  private:
    void advance() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        current_.pos = pos_;
        current_.text.clear();
        if (pos_ >= src_.size()) {
            current_.type = Tok::End;
            return;
        }
        const char c = src_[pos_];
        switch (c) {
            case '+': current_.type = Tok::Plus; ++pos_; return;
            case '-': current_.type = Tok::Minus; ++pos_; return;
            case '*': current_.type = Tok::Star; ++pos_; return;
            case '/': current_.type = Tok::Slash; ++pos_; return;
            case '^': current_.type = Tok::Caret; ++pos_; return;
            case '(': current_.type = Tok::LParen; ++pos_; return;
            case ')': current_.type = Tok::RParen; ++pos_; return;
            case ',': current_.type = Tok::Comma; ++pos_; return;
            default: break;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            lex_number();
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t end = pos_;
            while (end < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[end])) || src_[end] == '_'))
                ++end;
            current_.type = Tok::Ident;
            current_.text = std::string(src_.substr(pos_, end - pos_));
            pos_ = end;
            return;
        }
        throw ParseError(std::string("unexpected character '") + c + "' at position " +
                             std::to_string(pos_),
                         pos_);
    }

    void lex_number() {
        std::size_t end = pos_;
        while (end < src_.size() &&
               (std::isdigit(static_cast<unsigned char>(src_[end])) || src_[end] == '.'))
            ++end;
        if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
            std::size_t e = end + 1;
            if (e < src_.size() && (src_[e] == '+' || src_[e] == '-')) ++e;
            if (e < src_.size() && std::isdigit(static_cast<unsigned char>(src_[e]))) {
                ++e;
                while (e < src_.size() && std::isdigit(static_cast<unsigned char>(src_[e]))) ++e;
                end = e;
            }
        }
        double v = 0.0;
        auto res = std::from_chars(src_.data() + pos_, src_.data() + end, v);
        if (res.ec != std::errc{} || res.ptr != src_.data() + end)
            throw ParseError("malformed number at position " + std::to_string(pos_), pos_);
        current_.type = Tok::Number;
        current_.number = v;
        pos_ = end;
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    Token current_;
};

class Parser {
  public:
    Parser(std::string_view src, const SymbolTable& table) : lex_(src), table_(table) {}

    ExprPtr run() {
        ExprPtr e = parse_sum();
        const Token& t = lex_.peek();
        if (t.type != Tok::End)
            throw ParseError("unexpected token at position " + std::to_string(t.pos), t.pos);
        return e;
    }

  private:
    // sum    := product (('+'|'-') product)*
    // product:= unary (('*'|'/') unary)*
    // unary  := '-' unary | power
    // power  := atom ('^' unary)?          (right associative)
    // atom   := number | ident | ident '(' args ')' | '(' sum ')'
    ExprPtr parse_sum() {
        ExprPtr e = parse_product();
        for (;;) {
            const Tok t = lex_.peek().type;
            if (t == Tok::Plus) {
                lex_.take();
                e = Expr::add(e, parse_product());
            } else if (t == Tok::Minus) {
                lex_.take();
                e = Expr::sub(e, parse_product());
            } else {
                return e;
            }
        }
    }

    ExprPtr parse_product() {
        ExprPtr e = parse_unary();
        for (;;) {
            const Tok t = lex_.peek().type;
            if (t == Tok::Star) {
                lex_.take();
                e = Expr::mul(e, parse_unary());
            } else if (t == Tok::Slash) {
                lex_.take();
                e = Expr::div(e, parse_unary());
            } else {
                return e;
            }
        }
    }

    ExprPtr parse_unary() {
        if (lex_.peek().type == Tok::Minus) {
            lex_.take();
            return Expr::neg(parse_unary());
        }
        return parse_power();
    }

    ExprPtr parse_power() {
        ExprPtr base = parse_atom();
        if (lex_.peek().type == Tok::Caret) {
            lex_.take();
            return Expr::pow(base, parse_unary());
        }
        return base;
    }

    ExprPtr parse_atom() {
        Token t = lex_.take();
        switch (t.type) {
            case Tok::Number:
                return Expr::constant(t.number);
            case Tok::LParen: {
                ExprPtr e = parse_sum();
                expect(Tok::RParen, ")");
                return e;
            }
            case Tok::Ident:
                if (lex_.peek().type == Tok::LParen) return parse_call(t);
                return resolve_symbol(t);
            case Tok::End:
                throw ParseError("unexpected end of input at position " + std::to_string(t.pos),
                                 t.pos);
            default:
                throw ParseError("unexpected token at position " + std::to_string(t.pos), t.pos);
        }
    }

    ExprPtr parse_call(const Token& name) {
        lex_.take();  // '('
        if (name.text == "pow") {
            ExprPtr base = parse_sum();
            expect(Tok::Comma, ",");
            ExprPtr ex = parse_sum();
            expect(Tok::RParen, ")");
            return Expr::pow(base, ex);
        }
        Func f;
        if (name.text == "exp")
            f = Func::Exp;
        else if (name.text == "log")
            f = Func::Log;
        else if (name.text == "log10")
            f = Func::Log10;
        else if (name.text == "sqrt")
            f = Func::Sqrt;
        else
            throw ParseError("unknown function '" + name.text + "' at position " +
                                 std::to_string(name.pos),
                             name.pos);
        ExprPtr arg = parse_sum();
        expect(Tok::RParen, ")");
        return Expr::call(f, arg);
    }

    ExprPtr resolve_symbol(const Token& t) {
        const SymbolInfo* s = table_.find(t.text);
        if (!s) throw UnknownSymbolError(t.text, t.pos);
        return Expr::symbol_ref(*s);
    }

    void expect(Tok type, const char* what) {
        Token t = lex_.take();
        if (t.type != type)
            throw ParseError(std::string("expected '") + what + "' at position " +
                                 std::to_string(t.pos),
                             t.pos);
    }

    Lexer lex_;
    const SymbolTable& table_;
};

}  // namespace

ExprPtr parse(std::string_view source, const SymbolTable& table) {
    if (source.empty()) throw ParseError("empty expression", 0);
    return Parser(source, table).run();
}

}  // namespace itrp
