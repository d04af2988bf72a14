#ifndef ITRP_EXPR_HPP
#define ITRP_EXPR_HPP

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "itrp/errors.hpp"

namespace itrp {

enum class SymbolKind { State, Parameter, Input, Time };

struct SymbolInfo {
    std::string name;
    SymbolKind kind;
    int id;  // index into the evaluation environment
};

// Declared names an expression may reference. Evaluation environments are
// flat vectors indexed by symbol id, in declaration order.
class SymbolTable {
  public:
    int declare(const std::string& name, SymbolKind kind);
    const SymbolInfo* find(std::string_view name) const;
    const SymbolInfo& at(int id) const { return symbols_[static_cast<std::size_t>(id)]; }
    int size() const { return static_cast<int>(symbols_.size()); }

  private:
    std::vector<SymbolInfo> symbols_;
    std::unordered_map<std::string, int> index_;
};

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class ExprKind { Constant, Symbol, Neg, Add, Sub, Mul, Div, Pow, Call };
enum class Func { Exp, Log, Log10, Sqrt };

// Immutable expression tree. Nodes are shared; trees are safe to evaluate
// concurrently since eval takes the environment as an argument.
class Expr {
  public:
    ExprKind kind;
    double value = 0.0;       // Constant
    int symbol = -1;          // Symbol id
    std::string symbol_name;  // Symbol display name
    Func func = Func::Exp;    // Call
    ExprPtr a, b;

    double eval(std::span<const double> env) const;

    // Exact symbolic derivative w.r.t. one symbol. Simplifies only the
    // trivial x*0, x*1, x+0 cases.
    ExprPtr derivative(int symbol_id) const;

    bool depends_on(int symbol_id) const;

    // Re-parsable text form; parenthesized so the round trip preserves
    // evaluation order bit for bit.
    std::string to_string() const;

    // Replace symbol nodes via a callback (used for reparametrizations).
    ExprPtr substitute(const std::unordered_map<int, ExprPtr>& repl) const;

    static ExprPtr constant(double v);
    static ExprPtr symbol_ref(const SymbolInfo& s);
    static ExprPtr neg(ExprPtr e);
    static ExprPtr add(ExprPtr l, ExprPtr r);
    static ExprPtr sub(ExprPtr l, ExprPtr r);
    static ExprPtr mul(ExprPtr l, ExprPtr r);
    static ExprPtr div(ExprPtr l, ExprPtr r);
    static ExprPtr pow(ExprPtr base, ExprPtr exponent);
    static ExprPtr call(Func f, ExprPtr arg);
};

// Parse standard infix notation with precedence ^ > unary minus > * / > + -.
// Functions: exp, log, log10, sqrt, pow(a,b). Every identifier must resolve
// against `table`; throws ParseError / UnknownSymbolError otherwise.
ExprPtr parse(std::string_view source, const SymbolTable& table);

}  // namespace itrp

#endif
