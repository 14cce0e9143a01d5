#pragma once

#include "qctrl/waveform.hpp"

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace qctrl {

// Parametric expression tree over time. Immutable; nodes are shared.
//
// Grammar (see parse_expr):
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := NUMBER | IDENT | call | '(' expr ')' | '-' factor
//   call   := IDENT '(' [IDENT '=' expr (',' IDENT '=' expr)*] ')'
struct WaveExpr;
using ExprPtr = std::shared_ptr<const WaveExpr>;

struct WaveExpr {
    enum class Node { Const, Time, Param, Add, Sub, Mul, Div, Scale, Call };

    Node node = Node::Const;
    double value = 0.0;                                    // Const; Scale factor
    std::string name;                                      // Param name
    WaveKind kind = WaveKind::DC;                          // Call primitive
    ExprPtr lhs, rhs;                                      // binary ops; Scale uses lhs
    std::vector<std::pair<std::string, ExprPtr>> args;     // Call arguments, as written
};

bool expr_equal(const ExprPtr& a, const ExprPtr& b);

// Node builders.
namespace expr {
ExprPtr constant(double v);
ExprPtr time_var();
ExprPtr param(std::string name);
ExprPtr add(ExprPtr a, ExprPtr b);
ExprPtr sub(ExprPtr a, ExprPtr b);
ExprPtr mul(ExprPtr a, ExprPtr b);
ExprPtr divide(ExprPtr a, ExprPtr b);
ExprPtr scale(double factor, ExprPtr e);
ExprPtr call(WaveKind kind, std::vector<std::pair<std::string, ExprPtr>> args);
}  // namespace expr

// Throws ParseError with a 1-based column on syntax errors, unknown primitive
// names, and duplicate named arguments.
ExprPtr parse_expr(std::string_view text);

// Grammar-conformant text; parse_expr(print_expr(e)) is structurally
// identical for any parser-reachable tree.
std::string print_expr(const ExprPtr& e);

// d/dt of e. Supported: Const, Time, Param, Add, Sub, Mul, Scale, and the
// dc, sine, gauss, slope primitives. Throws Error naming the node otherwise
// (callers fall back to differentiate_numeric).
ExprPtr differentiate_expr(const ExprPtr& e);

// Pointwise evaluation. Primitive calls delegate to generate(); primitive
// arguments must not depend on t. Throws Error naming any unbound parameter.
Waveform sample_expr(const ExprPtr& e, const ParamMap& bindings, Eigen::Index length,
                     double sample_rate = kDefaultSampleRate, double t0 = 0.0);

// Evaluates a t-free scalar expression (e.g. a primitive argument).
double eval_scalar_expr(const ExprPtr& e, const ParamMap& bindings);

}  // namespace qctrl
