#include "qctrl/wave_expr.hpp"

#include "qctrl/error.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <variant>

namespace qctrl {

namespace expr {

namespace {
std::shared_ptr<WaveExpr> node(WaveExpr::Node n) {
    auto e = std::make_shared<WaveExpr>();
    e->node = n;
    return e;
}
}  // namespace

ExprPtr constant(double v) {
    auto e = node(WaveExpr::Node::Const);
    e->value = v;
    return e;
}

ExprPtr time_var() { return node(WaveExpr::Node::Time); }

ExprPtr param(std::string name) {
    auto e = node(WaveExpr::Node::Param);
    e->name = std::move(name);
    return e;
}

namespace {
ExprPtr binary(WaveExpr::Node n, ExprPtr a, ExprPtr b) {
    auto e = node(n);
    e->lhs = std::move(a);
    e->rhs = std::move(b);
    return e;
}
}  // namespace

ExprPtr add(ExprPtr a, ExprPtr b) { return binary(WaveExpr::Node::Add, std::move(a), std::move(b)); }
ExprPtr sub(ExprPtr a, ExprPtr b) { return binary(WaveExpr::Node::Sub, std::move(a), std::move(b)); }
ExprPtr mul(ExprPtr a, ExprPtr b) { return binary(WaveExpr::Node::Mul, std::move(a), std::move(b)); }
ExprPtr divide(ExprPtr a, ExprPtr b) { return binary(WaveExpr::Node::Div, std::move(a), std::move(b)); }

ExprPtr scale(double factor, ExprPtr e) {
    auto s = node(WaveExpr::Node::Scale);
    s->value = factor;
    s->lhs = std::move(e);
    return s;
}

ExprPtr call(WaveKind kind, std::vector<std::pair<std::string, ExprPtr>> args) {
    auto e = node(WaveExpr::Node::Call);
    e->kind = kind;
    e->args = std::move(args);
    return e;
}

}  // namespace expr

bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->node != b->node) return false;
    switch (a->node) {
        case WaveExpr::Node::Const:
            return a->value == b->value;
        case WaveExpr::Node::Time:
            return true;
        case WaveExpr::Node::Param:
            return a->name == b->name;
        case WaveExpr::Node::Scale:
            return a->value == b->value && expr_equal(a->lhs, b->lhs);
        case WaveExpr::Node::Add:
        case WaveExpr::Node::Sub:
        case WaveExpr::Node::Mul:
        case WaveExpr::Node::Div:
            return expr_equal(a->lhs, b->lhs) && expr_equal(a->rhs, b->rhs);
        case WaveExpr::Node::Call: {
            if (a->kind != b->kind || a->args.size() != b->args.size()) return false;
            for (std::size_t i = 0; i < a->args.size(); ++i) {
                if (a->args[i].first != b->args[i].first) return false;
                if (!expr_equal(a->args[i].second, b->args[i].second)) return false;
            }
            return true;
        }
    }
    return false;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

struct Token {
    enum class Type { Number, Ident, Plus, Minus, Star, Slash, LParen, RParen, Equals, Comma, End };
    Type type = Type::End;
    double number = 0.0;
    std::string ident;
    int column = 0;  // 1-based
};

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) { advance(); }

    const Token& peek() const { return tok_; }

    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

private:
    void advance() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        tok_ = Token{};
        tok_.column = static_cast<int>(pos_) + 1;
        if (pos_ >= text_.size()) {
            tok_.type = Token::Type::End;
            return;
        }
        const char c = text_[pos_];
        switch (c) {
            case '+': tok_.type = Token::Type::Plus; ++pos_; return;
            case '-': tok_.type = Token::Type::Minus; ++pos_; return;
            case '*': tok_.type = Token::Type::Star; ++pos_; return;
            case '/': tok_.type = Token::Type::Slash; ++pos_; return;
            case '(': tok_.type = Token::Type::LParen; ++pos_; return;
            case ')': tok_.type = Token::Type::RParen; ++pos_; return;
            case '=': tok_.type = Token::Type::Equals; ++pos_; return;
            case ',': tok_.type = Token::Type::Comma; ++pos_; return;
            default: break;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            lex_number();
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            tok_.type = Token::Type::Ident;
            tok_.ident = std::string(text_.substr(start, pos_ - start));
            return;
        }
        throw ParseError(tok_.column, std::string("unexpected character '") + c + "'");
    }

    void lex_number() {
        const std::size_t start = pos_;
        bool any_digit = false;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
            any_digit = true;
        }
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
                any_digit = true;
            }
        }
        if (!any_digit) throw ParseError(tok_.column, "malformed number");
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t mark = pos_;
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    ++pos_;
            } else {
                pos_ = mark;  // 'e' belongs to a following identifier, not this number
            }
        }
        const std::string_view span = text_.substr(start, pos_ - start);
        double v = 0.0;
        auto [p, ec] = std::from_chars(span.data(), span.data() + span.size(), v);
        if (ec != std::errc() || p != span.data() + span.size())
            throw ParseError(tok_.column, "malformed number");
        tok_.type = Token::Type::Number;
        tok_.number = v;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    Token tok_;
};

class Parser {
public:
    explicit Parser(std::string_view text) : lex_(text) {}

    ExprPtr parse() {
        ExprPtr e = parse_expr();
        const Token& t = lex_.peek();
        if (t.type != Token::Type::End)
            throw ParseError(t.column, "unexpected trailing input");
        return e;
    }

private:
    ExprPtr parse_expr() {
        ExprPtr e = parse_term();
        for (;;) {
            const Token& t = lex_.peek();
            if (t.type == Token::Type::Plus) {
                lex_.take();
                e = expr::add(std::move(e), parse_term());
            } else if (t.type == Token::Type::Minus) {
                lex_.take();
                e = expr::sub(std::move(e), parse_term());
            } else {
                return e;
            }
        }
    }

    ExprPtr parse_term() {
        ExprPtr e = parse_factor();
        for (;;) {
            const Token& t = lex_.peek();
            if (t.type == Token::Type::Star) {
                lex_.take();
                e = expr::mul(std::move(e), parse_factor());
            } else if (t.type == Token::Type::Slash) {
                lex_.take();
                e = expr::divide(std::move(e), parse_factor());
            } else {
                return e;
            }
        }
    }

    ExprPtr parse_factor() {
        const Token t = lex_.take();
        switch (t.type) {
            case Token::Type::Number:
                return expr::constant(t.number);
            case Token::Type::Minus: {
                ExprPtr inner = parse_factor();
                if (inner->node == WaveExpr::Node::Const) return expr::constant(-inner->value);
                return expr::scale(-1.0, std::move(inner));
            }
            case Token::Type::LParen: {
                ExprPtr e = parse_expr();
                expect(Token::Type::RParen, "expected ')'");
                return e;
            }
            case Token::Type::Ident: {
                if (lex_.peek().type == Token::Type::LParen) return parse_call(t);
                if (t.ident == "t") return expr::time_var();
                return expr::param(t.ident);
            }
            default:
                throw ParseError(t.column, "expected number, name, or '('");
        }
    }

    ExprPtr parse_call(const Token& name_tok) {
        if (!is_wave_kind_name(name_tok.ident))
            throw ParseError(name_tok.column, "unknown primitive '" + name_tok.ident + "'");
        const WaveKind kind = wave_kind_from_name(name_tok.ident);
        lex_.take();  // '('
        std::vector<std::pair<std::string, ExprPtr>> args;
        if (lex_.peek().type == Token::Type::RParen) {
            lex_.take();
            return expr::call(kind, std::move(args));
        }
        for (;;) {
            const Token arg_name = lex_.take();
            if (arg_name.type != Token::Type::Ident)
                throw ParseError(arg_name.column, "expected argument name");
            for (const auto& [existing, _] : args)
                if (existing == arg_name.ident)
                    throw ParseError(arg_name.column,
                                     "duplicate argument '" + arg_name.ident + "'");
            expect(Token::Type::Equals, "expected '='");
            args.emplace_back(arg_name.ident, parse_expr());
            const Token sep = lex_.take();
            if (sep.type == Token::Type::RParen) break;
            if (sep.type != Token::Type::Comma)
                throw ParseError(sep.column, "expected ',' or ')' in argument list");
        }
        return expr::call(kind, std::move(args));
    }

    void expect(Token::Type type, const char* msg) {
        const Token t = lex_.take();
        if (t.type != type) throw ParseError(t.column, msg);
    }

    Lexer lex_;
};

}  // namespace

ExprPtr parse_expr(std::string_view text) { return Parser(text).parse(); }

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

namespace {

std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

int node_prec(const WaveExpr& e) {
    switch (e.node) {
        case WaveExpr::Node::Add:
        case WaveExpr::Node::Sub: return 1;
        case WaveExpr::Node::Mul:
        case WaveExpr::Node::Div: return 2;
        case WaveExpr::Node::Scale: return 3;
        default: return 4;
    }
}

void print_node(const ExprPtr& e, int min_prec, std::string& out) {
    const int prec = node_prec(*e);
    const bool parens = prec < min_prec;
    if (parens) out += '(';
    switch (e->node) {
        case WaveExpr::Node::Const:
            out += format_double(e->value);
            break;
        case WaveExpr::Node::Time:
            out += 't';
            break;
        case WaveExpr::Node::Param:
            out += e->name;
            break;
        case WaveExpr::Node::Add:
            print_node(e->lhs, 1, out);
            out += '+';
            print_node(e->rhs, 2, out);
            break;
        case WaveExpr::Node::Sub:
            print_node(e->lhs, 1, out);
            out += '-';
            print_node(e->rhs, 2, out);
            break;
        case WaveExpr::Node::Mul:
            print_node(e->lhs, 2, out);
            out += '*';
            print_node(e->rhs, 3, out);
            break;
        case WaveExpr::Node::Div:
            print_node(e->lhs, 2, out);
            out += '/';
            print_node(e->rhs, 3, out);
            break;
        case WaveExpr::Node::Scale:
            // Only -1 scales are parser-reachable (unary minus); other factors
            // print as a product and re-parse as Mul.
            if (e->value == -1.0) {
                out += '-';
                print_node(e->lhs, 3, out);
            } else {
                out += format_double(e->value);
                out += '*';
                print_node(e->lhs, 3, out);
            }
            break;
        case WaveExpr::Node::Call: {
            out += wave_kind_name(e->kind);
            out += '(';
            bool first = true;
            for (const auto& [name, arg] : e->args) {
                if (!first) out += ", ";
                first = false;
                out += name;
                out += '=';
                print_node(arg, 0, out);
            }
            out += ')';
            break;
        }
    }
    if (parens) out += ')';
}

}  // namespace

std::string print_expr(const ExprPtr& e) {
    std::string out;
    print_node(e, 0, out);
    return out;
}

// ---------------------------------------------------------------------------
// Symbolic differentiation
// ---------------------------------------------------------------------------

namespace {

// Argument lookup with the generator's defaults materialized.
ExprPtr call_arg(const WaveExpr& call, std::string_view name, double default_value) {
    for (const auto& [n, e] : call.args)
        if (n == name) return e;
    if (std::isnan(default_value))
        throw Error("missing parameter '" + std::string(name) + "' for " +
                    std::string(wave_kind_name(call.kind)));
    return expr::constant(default_value);
}

constexpr double kReq = std::numeric_limits<double>::quiet_NaN();

ExprPtr diff_call(const ExprPtr& e) {
    using namespace expr;
    switch (e->kind) {
        case WaveKind::DC:
            return constant(0.0);
        case WaveKind::Sine: {
            // d/dt a*sin(2*pi*f*t + phi) = a*2*pi*f * sin(2*pi*f*t + phi + pi/2)
            ExprPtr a = call_arg(*e, "a", 1.0);
            ExprPtr f = call_arg(*e, "f", kReq);
            ExprPtr phi = call_arg(*e, "phi", 0.0);
            ExprPtr cosine = call(WaveKind::Sine,
                                  {{"a", constant(1.0)},
                                   {"f", f},
                                   {"phi", add(phi, constant(std::numbers::pi / 2.0))}});
            return mul(mul(a, scale(2.0 * std::numbers::pi, f)), cosine);
        }
        case WaveKind::Gaussian: {
            // d/dt gauss = gauss * (mu - t) / sigma^2
            ExprPtr mu = call_arg(*e, "mu", kReq);
            ExprPtr sigma = call_arg(*e, "sigma", kReq);
            return mul(e, divide(sub(mu, time_var()), mul(sigma, sigma)));
        }
        case WaveKind::Slope: {
            // a.e. derivative: a/T inside the ramp, 0 outside
            ExprPtr a = call_arg(*e, "a", 1.0);
            ExprPtr start = call_arg(*e, "t0", 0.0);
            ExprPtr dur = call_arg(*e, "T", kReq);
            return call(WaveKind::Rectangle,
                        {{"a", divide(a, dur)}, {"t1", start}, {"t2", add(start, dur)}});
        }
        default:
            throw Error("no symbolic derivative for '" +
                        std::string(wave_kind_name(e->kind)) + "'");
    }
}

}  // namespace

ExprPtr differentiate_expr(const ExprPtr& e) {
    using namespace expr;
    switch (e->node) {
        case WaveExpr::Node::Const:
        case WaveExpr::Node::Param:
            return constant(0.0);
        case WaveExpr::Node::Time:
            return constant(1.0);
        case WaveExpr::Node::Add:
            return add(differentiate_expr(e->lhs), differentiate_expr(e->rhs));
        case WaveExpr::Node::Sub:
            return sub(differentiate_expr(e->lhs), differentiate_expr(e->rhs));
        case WaveExpr::Node::Mul:
            return add(mul(differentiate_expr(e->lhs), e->rhs),
                       mul(e->lhs, differentiate_expr(e->rhs)));
        case WaveExpr::Node::Scale:
            return scale(e->value, differentiate_expr(e->lhs));
        case WaveExpr::Node::Div:
            throw Error("no symbolic derivative for quotient node");
        case WaveExpr::Node::Call:
            return diff_call(e);
    }
    throw Error("invalid expression node");
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

using Value = std::variant<double, Waveform>;

struct EvalContext {
    const ParamMap* bindings;
    Eigen::Index length;
    double sample_rate;
    double t0;
};

double eval_scalar(const ExprPtr& e, const EvalContext& ctx, const std::string& arg_name);

double lookup_param(const std::string& name, const EvalContext& ctx) {
    auto it = ctx.bindings->find(name);
    if (it == ctx.bindings->end()) throw Error("unbound parameter '" + name + "'");
    return it->second;
}

// Scalar-only evaluation for primitive arguments; rejects t.
double eval_scalar(const ExprPtr& e, const EvalContext& ctx, const std::string& arg_name) {
    switch (e->node) {
        case WaveExpr::Node::Const: return e->value;
        case WaveExpr::Node::Param: return lookup_param(e->name, ctx);
        case WaveExpr::Node::Time:
            throw Error("primitive argument '" + arg_name + "' must not depend on t");
        case WaveExpr::Node::Add:
            return eval_scalar(e->lhs, ctx, arg_name) + eval_scalar(e->rhs, ctx, arg_name);
        case WaveExpr::Node::Sub:
            return eval_scalar(e->lhs, ctx, arg_name) - eval_scalar(e->rhs, ctx, arg_name);
        case WaveExpr::Node::Mul:
            return eval_scalar(e->lhs, ctx, arg_name) * eval_scalar(e->rhs, ctx, arg_name);
        case WaveExpr::Node::Div:
            return eval_scalar(e->lhs, ctx, arg_name) / eval_scalar(e->rhs, ctx, arg_name);
        case WaveExpr::Node::Scale:
            return e->value * eval_scalar(e->lhs, ctx, arg_name);
        case WaveExpr::Node::Call:
            throw Error("primitive argument '" + arg_name + "' must be a scalar expression");
    }
    throw Error("invalid expression node");
}

Waveform broadcast(double v, const EvalContext& ctx) {
    Waveform w;
    w.sample_rate = ctx.sample_rate;
    w.t0 = ctx.t0;
    w.samples = Samples::Constant(ctx.length, v);
    return w;
}

Value eval(const ExprPtr& e, const EvalContext& ctx) {
    switch (e->node) {
        case WaveExpr::Node::Const:
            return e->value;
        case WaveExpr::Node::Param:
            return lookup_param(e->name, ctx);
        case WaveExpr::Node::Time: {
            Waveform w;
            w.sample_rate = ctx.sample_rate;
            w.t0 = ctx.t0;
            w.samples.resize(ctx.length);
            for (Eigen::Index n = 0; n < ctx.length; ++n)
                w.samples[n] = ctx.t0 + static_cast<double>(n) / ctx.sample_rate;
            return w;
        }
        case WaveExpr::Node::Call: {
            ParamMap params;
            for (const auto& [name, arg] : e->args) params[name] = eval_scalar(arg, ctx, name);
            return generate(e->kind, params, ctx.length, ctx.sample_rate, ctx.t0);
        }
        case WaveExpr::Node::Scale: {
            Value v = eval(e->lhs, ctx);
            if (std::holds_alternative<double>(v)) return e->value * std::get<double>(v);
            Waveform w = std::move(std::get<Waveform>(v));
            w.samples *= e->value;
            return w;
        }
        default:
            break;
    }

    // Binary nodes. Waveform operands route through pointwise() so a sampled
    // sum is bit-identical to pointwise-combining the sampled children.
    Value lv = eval(e->lhs, ctx);
    Value rv = eval(e->rhs, ctx);
    const bool lw = std::holds_alternative<Waveform>(lv);
    const bool rw = std::holds_alternative<Waveform>(rv);

    if (!lw && !rw) {
        const double a = std::get<double>(lv), b = std::get<double>(rv);
        switch (e->node) {
            case WaveExpr::Node::Add: return a + b;
            case WaveExpr::Node::Sub: return a - b;
            case WaveExpr::Node::Mul: return a * b;
            case WaveExpr::Node::Div: return a / b;
            default: throw Error("invalid expression node");
        }
    }

    Waveform a = lw ? std::move(std::get<Waveform>(lv)) : broadcast(std::get<double>(lv), ctx);
    Waveform b = rw ? std::move(std::get<Waveform>(rv)) : broadcast(std::get<double>(rv), ctx);
    switch (e->node) {
        case WaveExpr::Node::Add: return pointwise(PointwiseOp::Add, a, b);
        case WaveExpr::Node::Sub: return pointwise(PointwiseOp::Sub, a, b);
        case WaveExpr::Node::Mul: return pointwise(PointwiseOp::Mul, a, b);
        case WaveExpr::Node::Div: {
            Waveform out = a;
            out.samples = a.samples / b.samples;
            return out;
        }
        default: throw Error("invalid expression node");
    }
}

}  // namespace

Waveform sample_expr(const ExprPtr& e, const ParamMap& bindings, Eigen::Index length,
                     double sample_rate, double t0) {
    if (length < 1) throw Error("waveform length must be >= 1");
    EvalContext ctx{&bindings, length, sample_rate, t0};
    Value v = eval(e, ctx);
    if (std::holds_alternative<Waveform>(v)) return std::move(std::get<Waveform>(v));
    return broadcast(std::get<double>(v), ctx);
}

double eval_scalar_expr(const ExprPtr& e, const ParamMap& bindings) {
    EvalContext ctx{&bindings, 1, kDefaultSampleRate, 0.0};
    return eval_scalar(e, ctx, "value");
}

}  // namespace qctrl
