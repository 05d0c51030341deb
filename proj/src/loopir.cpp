#include "gridmap/loopir.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "gridmap/error.hpp"

namespace gridmap {

// ---------------------------------------------------------------------------
// 32-bit wrapping arithmetic (shared semantics for interpreter + simulator)

std::int32_t wrap_add(std::int32_t a, std::int32_t b) {
    return std::int32_t(std::uint32_t(a) + std::uint32_t(b));
}
std::int32_t wrap_sub(std::int32_t a, std::int32_t b) {
    return std::int32_t(std::uint32_t(a) - std::uint32_t(b));
}
std::int32_t wrap_mul(std::int32_t a, std::int32_t b) {
    return std::int32_t(std::uint32_t(a) * std::uint32_t(b));
}
std::int32_t wrap_div(std::int32_t a, std::int32_t b) {
    assert(b != 0);
    if (a == INT32_MIN && b == -1) return INT32_MIN;
    return a / b;
}

// ---------------------------------------------------------------------------
// AffineExpr

std::int64_t AffineExpr::coeff(const std::string& n) const {
    for (const auto& [name, k] : terms)
        if (name == n) return k;
    return 0;
}

AffineExpr AffineExpr::lit(std::int64_t c) {
    AffineExpr e;
    e.constant = c;
    return e;
}

AffineExpr AffineExpr::var(const std::string& n) {
    AffineExpr e;
    e.terms.emplace_back(n, 1);
    return e;
}

static AffineExpr normalize(std::map<std::string, std::int64_t> m,
                            std::int64_t c) {
    AffineExpr e;
    e.constant = c;
    for (auto& [n, k] : m)
        if (k != 0) e.terms.emplace_back(n, k);
    return e;
}

AffineExpr AffineExpr::operator+(const AffineExpr& o) const {
    std::map<std::string, std::int64_t> m(terms.begin(), terms.end());
    for (const auto& [n, k] : o.terms) m[n] += k;
    return normalize(std::move(m), constant + o.constant);
}

AffineExpr AffineExpr::operator-(const AffineExpr& o) const {
    std::map<std::string, std::int64_t> m(terms.begin(), terms.end());
    for (const auto& [n, k] : o.terms) m[n] -= k;
    return normalize(std::move(m), constant - o.constant);
}

AffineExpr AffineExpr::scaled(std::int64_t k) const {
    std::map<std::string, std::int64_t> m;
    for (const auto& [n, c] : terms) m[n] = c * k;
    return normalize(std::move(m), constant * k);
}

std::string AffineExpr::str() const {
    std::ostringstream os;
    bool first = true;
    for (const auto& [n, k] : terms) {
        if (!first) os << (k < 0 ? " - " : " + ");
        else if (k < 0) os << "-";
        first = false;
        if (std::abs(k) != 1) os << std::abs(k) << "*";
        os << n;
    }
    if (first) {
        os << constant;
    } else if (constant != 0) {
        os << (constant < 0 ? " - " : " + ") << std::abs(constant);
    }
    return os.str();
}

const char* rel_name(Rel r) {
    switch (r) {
    case Rel::Eq: return "==";
    case Rel::Ne: return "!=";
    case Rel::Lt: return "<";
    case Rel::Le: return "<=";
    case Rel::Gt: return ">";
    case Rel::Ge: return ">=";
    }
    return "?";
}

bool rel_holds(Rel r, std::int64_t lhs, std::int64_t rhs) {
    switch (r) {
    case Rel::Eq: return lhs == rhs;
    case Rel::Ne: return lhs != rhs;
    case Rel::Lt: return lhs < rhs;
    case Rel::Le: return lhs <= rhs;
    case Rel::Gt: return lhs > rhs;
    case Rel::Ge: return lhs >= rhs;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Expr

ExprPtr Expr::lit(std::int64_t v) {
    auto e = std::make_unique<Expr>();
    e->kind = Kind::Literal;
    e->value = v;
    return e;
}

ExprPtr Expr::ref(const std::string& n) {
    auto e = std::make_unique<Expr>();
    e->kind = Kind::NameRef;
    e->name = n;
    return e;
}

ExprPtr Expr::array(const std::string& n, std::vector<AffineExpr> subs) {
    auto e = std::make_unique<Expr>();
    e->kind = Kind::ArrayRef;
    e->name = n;
    e->subscript = std::move(subs);
    return e;
}

ExprPtr Expr::bin(char op, ExprPtr l, ExprPtr r) {
    auto e = std::make_unique<Expr>();
    e->kind = Kind::Binary;
    e->op = op;
    e->lhs = std::move(l);
    e->rhs = std::move(r);
    return e;
}

ExprPtr Expr::clone() const {
    auto e = std::make_unique<Expr>();
    e->kind = kind;
    e->value = value;
    e->name = name;
    e->subscript = subscript;
    e->op = op;
    if (lhs) e->lhs = lhs->clone();
    if (rhs) e->rhs = rhs->clone();
    return e;
}

Statement Statement::clone() const {
    Statement s;
    s.guard = guard;
    s.target = target;
    s.expr = expr ? expr->clone() : nullptr;
    return s;
}

LoopNest LoopNest::clone() const {
    LoopNest n;
    n.name = name;
    n.arrays = arrays;
    n.scalars = scalars;
    n.dims = dims;
    for (const auto& s : body) n.body.push_back(s.clone());
    return n;
}

std::int64_t ArrayDecl::words() const {
    std::int64_t w = 1;
    for (auto e : extents) w *= e;
    return w;
}

std::int64_t ArrayRegion::words() const {
    std::int64_t w = 1;
    for (auto e : extents) w *= e;
    return w;
}

std::map<std::string, ArrayRegion> compute_layout(const LoopNest& nest) {
    std::map<std::string, ArrayRegion> layout;
    std::int64_t base = 0;
    for (const auto& a : nest.arrays) {
        layout[a.name] = {base, a.extents};
        base += a.words();
    }
    return layout;
}

// ---------------------------------------------------------------------------
// Tokenizer + parser for the kernel text form

namespace {

struct Token {
    enum class Kind { Ident, Int, Sym, End } kind = Kind::End;
    std::string text;
    std::int64_t value = 0;
};

struct LineLexer {
    std::vector<Token> toks;
    size_t pos = 0;
    int line_no;

    LineLexer(const std::string& line, int line_no) : line_no(line_no) {
        size_t i = 0;
        while (i < line.size()) {
            char c = line[i];
            if (c == ' ') { i++; continue; }
            if (c == '#') break;
            if (isalpha(c) || c == '_') {
                size_t j = i;
                while (j < line.size() && (isalnum(line[j]) || line[j] == '_')) j++;
                toks.push_back({Token::Kind::Ident, line.substr(i, j - i), 0});
                i = j;
            } else if (isdigit(c)) {
                size_t j = i;
                while (j < line.size() && isdigit(line[j])) j++;
                Token t{Token::Kind::Int, line.substr(i, j - i), 0};
                t.value = std::stoll(t.text);
                toks.push_back(t);
                i = j;
            } else {
                static const char* two[] = {"==", "!=", "<=", ">="};
                std::string sym(1, c);
                if (i + 1 < line.size()) {
                    std::string pair = line.substr(i, 2);
                    for (const char* s : two)
                        if (pair == s) sym = pair;
                }
                if (std::string("+-*/()[]=:<>!").find(c) == std::string::npos)
                    err("unexpected character '" + std::string(1, c) + "'");
                toks.push_back({Token::Kind::Sym, sym, 0});
                i += sym.size();
            }
        }
    }

    [[noreturn]] void err(const std::string& msg) const {
        throw ParseError("line " + std::to_string(line_no) + ": " + msg);
    }
    // structurally valid text that breaks a scoping or shape rule
    [[noreturn]] void err_sem(const std::string& msg) const {
        throw SemanticError("line " + std::to_string(line_no) + ": " + msg);
    }
    const Token& peek() const {
        static Token end;
        return pos < toks.size() ? toks[pos] : end;
    }
    Token next() {
        Token t = peek();
        if (t.kind != Token::Kind::End) pos++;
        return t;
    }
    bool accept_sym(const std::string& s) {
        if (peek().kind == Token::Kind::Sym && peek().text == s) {
            pos++;
            return true;
        }
        return false;
    }
    void expect_sym(const std::string& s) {
        if (!accept_sym(s)) err("expected '" + s + "'");
    }
    std::string expect_ident(const char* what) {
        if (peek().kind != Token::Kind::Ident) err(std::string("expected ") + what);
        return next().text;
    }
    bool done() const { return peek().kind == Token::Kind::End; }
};

struct Scope {
    std::set<std::string> indices; // loop indices in scope
    const std::map<std::string, ArrayRegion>* arrays = nullptr;
};

AffineExpr to_affine(const Expr& e, const Scope& sc, int line_no);

// Recursive-descent expression parser; * / bind tighter than + -.
// Names and subscripts are resolved against the scope as they are read.
ExprPtr parse_expr(LineLexer& lx, const Scope& sc);

ExprPtr parse_primary(LineLexer& lx, const Scope& sc) {
    const Token& t = lx.peek();
    if (t.kind == Token::Kind::Int) return Expr::lit(lx.next().value);
    if (lx.accept_sym("-"))
        return Expr::bin('-', Expr::lit(0), parse_primary(lx, sc));
    if (lx.accept_sym("(")) {
        auto e = parse_expr(lx, sc);
        lx.expect_sym(")");
        return e;
    }
    if (t.kind == Token::Kind::Ident) {
        std::string name = lx.next().text;
        if (lx.peek().kind == Token::Kind::Sym && lx.peek().text == "[") {
            auto it = sc.arrays->find(name);
            if (it == sc.arrays->end()) lx.err_sem("unknown array '" + name + "'");
            std::vector<AffineExpr> subs;
            while (lx.accept_sym("[")) {
                subs.push_back(to_affine(*parse_expr(lx, sc), sc, lx.line_no));
                lx.expect_sym("]");
            }
            if (subs.size() != it->second.extents.size())
                lx.err_sem("array '" + name + "' expects " +
                       std::to_string(it->second.extents.size()) + " subscripts");
            return Expr::array(name, std::move(subs));
        }
        if (!sc.indices.count(name))
            lx.err_sem("unknown name '" + name + "'");
        return Expr::ref(name);
    }
    lx.err("expected expression");
}

ExprPtr parse_term(LineLexer& lx, const Scope& sc) {
    auto e = parse_primary(lx, sc);
    while (lx.peek().kind == Token::Kind::Sym &&
           (lx.peek().text == "*" || lx.peek().text == "/")) {
        char op = lx.next().text[0];
        e = Expr::bin(op, std::move(e), parse_primary(lx, sc));
    }
    return e;
}

ExprPtr parse_expr(LineLexer& lx, const Scope& sc) {
    auto e = parse_term(lx, sc);
    while (lx.peek().kind == Token::Kind::Sym &&
           (lx.peek().text == "+" || lx.peek().text == "-")) {
        char op = lx.next().text[0];
        e = Expr::bin(op, std::move(e), parse_term(lx, sc));
    }
    return e;
}

// Lower a parsed tree to AffineExpr; throws SemanticError when non-affine or
// when it references arrays.
AffineExpr to_affine(const Expr& e, const Scope& sc, int line_no) {
    auto fail = [&](const std::string& m) -> AffineExpr {
        throw SemanticError("line " + std::to_string(line_no) + ": " + m);
    };
    switch (e.kind) {
    case Expr::Kind::Literal: return AffineExpr::lit(e.value);
    case Expr::Kind::NameRef:
        if (!sc.indices.count(e.name))
            return fail("unknown name '" + e.name + "' in affine context");
        return AffineExpr::var(e.name);
    case Expr::Kind::ArrayRef:
        return fail("array reference not allowed in affine context");
    case Expr::Kind::Binary: {
        if (e.op == '+') return to_affine(*e.lhs, sc, line_no) + to_affine(*e.rhs, sc, line_no);
        if (e.op == '-') return to_affine(*e.lhs, sc, line_no) - to_affine(*e.rhs, sc, line_no);
        if (e.op == '*') {
            AffineExpr l = to_affine(*e.lhs, sc, line_no);
            AffineExpr r = to_affine(*e.rhs, sc, line_no);
            if (l.is_constant()) return r.scaled(l.constant);
            if (r.is_constant()) return l.scaled(r.constant);
            return fail("non-affine product");
        }
        if (e.op == '/') {
            AffineExpr l = to_affine(*e.lhs, sc, line_no);
            AffineExpr r = to_affine(*e.rhs, sc, line_no);
            if (l.is_constant() && r.is_constant() && r.constant != 0)
                return AffineExpr::lit(l.constant / r.constant);
            return fail("non-affine quotient");
        }
        return fail("bad operator in affine context");
    }
    }
    return fail("bad expression");
}

Rel parse_rel_tok(LineLexer& lx) {
    if (lx.peek().kind != Token::Kind::Sym) lx.err("expected relation");
    std::string s = lx.next().text;
    if (s == "==") return Rel::Eq;
    if (s == "!=") return Rel::Ne;
    if (s == "<") return Rel::Lt;
    if (s == "<=") return Rel::Le;
    if (s == ">") return Rel::Gt;
    if (s == ">=") return Rel::Ge;
    lx.err("expected relation, got '" + s + "'");
}

int indent_of(const std::string& line, int line_no) {
    int n = 0;
    for (char c : line) {
        if (c == ' ') n++;
        else if (c == '\t')
            throw ParseError("line " + std::to_string(line_no) +
                             ": tabs not supported, use spaces");
        else break;
    }
    return n;
}

} // namespace

LoopNest parse_kernel(const std::string& text) {
    LoopNest nest;
    std::map<std::string, ArrayRegion> arrays; // for scope checks
    std::vector<int> loop_indent;
    int stmt_indent = -1;
    bool saw_kernel = false;

    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        int ind = indent_of(line, line_no);
        LineLexer lx(line, line_no);
        if (lx.done()) continue;

        const Token& head = lx.peek();
        if (head.kind == Token::Kind::Ident && head.text == "kernel" && !saw_kernel) {
            lx.next();
            nest.name = lx.expect_ident("kernel name");
            if (!lx.done()) lx.err("trailing tokens after kernel name");
            saw_kernel = true;
            continue;
        }
        if (!saw_kernel) lx.err("expected 'kernel <name>' first");

        if (head.kind == Token::Kind::Ident && head.text == "array" &&
            loop_indent.empty() && stmt_indent < 0) {
            lx.next();
            ArrayDecl d;
            d.name = lx.expect_ident("array name");
            if (arrays.count(d.name)) lx.err_sem("duplicate array '" + d.name + "'");
            while (lx.accept_sym("[")) {
                if (lx.peek().kind != Token::Kind::Int) lx.err("array extents must be integer literals");
                d.extents.push_back(lx.next().value);
                if (d.extents.back() < 1) lx.err("array extent must be >= 1");
                lx.expect_sym("]");
            }
            if (d.extents.empty()) lx.err("array needs at least one extent");
            if (!lx.done()) lx.err("trailing tokens after array declaration");
            nest.arrays.push_back(d);
            arrays[d.name] = {0, d.extents};
            continue;
        }

        Scope sc;
        for (const auto& dim : nest.dims) sc.indices.insert(dim.name);
        sc.arrays = &arrays;

        if (head.kind == Token::Kind::Ident && head.text == "loop") {
            if (stmt_indent >= 0) lx.err("loop after statements (imperfect nest)");
            if (!loop_indent.empty() && ind <= loop_indent.back())
                lx.err("nested loop must be indented deeper");
            lx.next();
            LoopDim dim;
            dim.name = lx.expect_ident("loop index");
            if (sc.indices.count(dim.name)) lx.err_sem("duplicate index '" + dim.name + "'");
            if (arrays.count(dim.name)) lx.err_sem("index shadows array '" + dim.name + "'");
            dim.lower = to_affine(*parse_expr(lx, sc), sc, line_no);
            dim.upper = to_affine(*parse_expr(lx, sc), sc, line_no);
            if (!lx.done()) lx.err("trailing tokens after loop bounds");
            nest.dims.push_back(dim);
            loop_indent.push_back(ind);
            continue;
        }

        // statement (optionally guarded)
        if (loop_indent.empty()) lx.err("statement outside any loop");
        if (ind <= loop_indent.back()) lx.err("statement must be indented inside the innermost loop");
        if (stmt_indent < 0) stmt_indent = ind;
        else if (ind != stmt_indent) lx.err("inconsistent statement indentation");

        Statement st;
        if (head.kind == Token::Kind::Ident && head.text == "if") {
            lx.next();
            Condition cond;
            cond.lhs = to_affine(*parse_expr(lx, sc), sc, line_no);
            cond.rel = parse_rel_tok(lx);
            cond.rhs = to_affine(*parse_expr(lx, sc), sc, line_no);
            lx.expect_sym(":");
            st.guard = cond;
        }
        std::string tname = lx.expect_ident("assignment target");
        auto ait = arrays.find(tname);
        if (ait == arrays.end()) lx.err_sem("unknown array '" + tname + "'");
        st.target.name = tname;
        while (lx.accept_sym("[")) {
            st.target.subscript.push_back(to_affine(*parse_expr(lx, sc), sc, line_no));
            lx.expect_sym("]");
        }
        if (st.target.subscript.size() != ait->second.extents.size())
            lx.err_sem("target rank mismatch for '" + tname + "'");
        lx.expect_sym("=");
        st.expr = parse_expr(lx, sc);
        if (!lx.done()) lx.err("trailing tokens after statement");
        nest.body.push_back(std::move(st));
    }

    if (!saw_kernel) throw ParseError("empty kernel text");
    if (nest.dims.empty()) throw ParseError("kernel has no loops");
    if (nest.body.empty()) throw ParseError("kernel has no statements");

    // bounds may only use outer indices
    for (size_t d = 0; d < nest.dims.size(); d++) {
        for (const auto* b : {&nest.dims[d].lower, &nest.dims[d].upper})
            for (const auto& [n, k] : b->terms) {
                (void)k;
                bool outer = false;
                for (size_t o = 0; o < d; o++)
                    if (nest.dims[o].name == n) outer = true;
                if (!outer)
                    throw SemanticError("bound of loop '" + nest.dims[d].name +
                                        "' uses non-outer name '" + n + "'");
            }
    }
    return nest;
}

LoopNest parse_kernel_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open kernel file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_kernel(ss.str());
}

// ---------------------------------------------------------------------------
// Builtins (rendered as kernel text so the parser is the single front end)

namespace {
std::string render(const char* tmpl, int n) {
    std::string out;
    for (const char* p = tmpl; *p; p++) {
        if (*p == '@') {
            char k = *++p;
            int v = n;
            if (k == 'M') v = n - 1;           // N-1
            else if (k != 'N') throw SemanticError("bad template");
            out += std::to_string(v);
        } else {
            out += *p;
        }
    }
    return out;
}
} // namespace

const std::vector<std::string>& builtin_kernel_names() {
    static const std::vector<std::string> names = {"gemm", "atax", "gesummv",
                                                   "mvt", "trisolv"};
    return names;
}

LoopNest builtin_kernel(const std::string& name, int n) {
    if (n < 1) throw SemanticError("kernel size must be >= 1");
    const char* tmpl = nullptr;
    if (name == "gemm") {
        tmpl = "kernel gemm\n"
               "array C[@N][@N]\n"
               "array A[@N][@N]\n"
               "array B[@N][@N]\n"
               "loop i 0 @N\n"
               " loop j 0 @N\n"
               "  loop k 0 @N\n"
               "   C[i][j] = C[i][j] + A[i][k] * B[k][j]\n";
    } else if (name == "atax") {
        // two passes folded into one perfect nest: p=0 computes tmp = A x,
        // p=1 accumulates y = A^T tmp
        tmpl = "kernel atax\n"
               "array A[@N][@N]\n"
               "array x[@N]\n"
               "array y[@N]\n"
               "array tmp[@N]\n"
               "loop i 0 @N\n"
               " loop p 0 2\n"
               "  loop j 0 @N\n"
               "   if p + j == 0 : tmp[i] = 0\n"
               "   if 2*i + p == 1 : y[j] = 0\n"
               "   if p == 0 : tmp[i] = tmp[i] + A[i][j] * x[j]\n"
               "   if p == 1 : y[j] = y[j] + A[i][j] * tmp[i]\n";
    } else if (name == "gesummv") {
        tmpl = "kernel gesummv\n"
               "array A[@N][@N]\n"
               "array B[@N][@N]\n"
               "array x[@N]\n"
               "array y[@N]\n"
               "array tmp[@N]\n"
               "loop i 0 @N\n"
               " loop j 0 @N\n"
               "  if j == 0 : tmp[i] = 0\n"
               "  if j == 0 : y[i] = 0\n"
               "  tmp[i] = tmp[i] + A[i][j] * x[j]\n"
               "  y[i] = y[i] + B[i][j] * x[j]\n"
               "  if j == @M : y[i] = 3 * tmp[i] + 2 * y[i]\n";
    } else if (name == "mvt") {
        tmpl = "kernel mvt\n"
               "array A[@N][@N]\n"
               "array x1[@N]\n"
               "array x2[@N]\n"
               "array y1[@N]\n"
               "array y2[@N]\n"
               "loop i 0 @N\n"
               " loop j 0 @N\n"
               "  x1[i] = x1[i] + A[i][j] * y1[j]\n"
               "  x2[i] = x2[i] + A[j][i] * y2[j]\n";
    } else if (name == "trisolv") {
        tmpl = "kernel trisolv\n"
               "array L[@N][@N]\n"
               "array x[@N]\n"
               "array b[@N]\n"
               "loop i 0 @N\n"
               " loop j 0 i + 1\n"
               "  if j == 0 : x[i] = b[i]\n"
               "  if j < i : x[i] = x[i] - L[i][j] * x[j]\n"
               "  if j == i : x[i] = x[i] / L[i][i]\n";
    } else {
        throw SemanticError("unknown builtin kernel '" + name + "'");
    }
    return parse_kernel(render(tmpl, n));
}

// ---------------------------------------------------------------------------
// Index-space enumeration

namespace {

std::int64_t eval_affine(const AffineExpr& e,
                         const std::map<std::string, std::int64_t>& env) {
    std::int64_t v = e.constant;
    for (const auto& [n, k] : e.terms) {
        auto it = env.find(n);
        if (it == env.end()) throw SemanticError("unbound name '" + n + "'");
        v += k * it->second;
    }
    return v;
}

// Calls fn(env) for every point of the index space, in lexicographic order.
template <typename Fn>
void enumerate(const LoopNest& nest, std::map<std::string, std::int64_t>& env,
               size_t d, Fn&& fn) {
    if (d == nest.dims.size()) {
        fn(env);
        return;
    }
    std::int64_t lo = eval_affine(nest.dims[d].lower, env);
    std::int64_t up = eval_affine(nest.dims[d].upper, env);
    for (std::int64_t v = lo; v < up; v++) {
        env[nest.dims[d].name] = v;
        enumerate(nest, env, d + 1, fn);
    }
    env.erase(nest.dims[d].name);
}

std::string iter_str(const LoopNest& nest,
                     const std::map<std::string, std::int64_t>& env) {
    std::ostringstream os;
    os << "(";
    for (size_t d = 0; d < nest.dims.size(); d++) {
        if (d) os << ",";
        auto it = env.find(nest.dims[d].name);
        os << nest.dims[d].name << "=" << (it == env.end() ? 0 : it->second);
    }
    os << ")";
    return os.str();
}

} // namespace

std::int64_t trip_count(const LoopNest& nest) {
    std::int64_t n = 0;
    std::map<std::string, std::int64_t> env;
    for (const auto& s : nest.scalars) env[s] = 0;
    enumerate(nest, env, 0, [&](auto&) { n++; });
    return n;
}

// ---------------------------------------------------------------------------
// Transforms

LoopNest extract_innermost(const LoopNest& nest) {
    LoopNest out = nest.clone();
    if (out.dims.size() <= 1) return out;
    LoopDim inner = out.dims.back();
    // outer indices become fixed at their lower bounds; bounds must then be
    // constant, otherwise the extraction is undefined
    std::map<std::string, std::int64_t> env;
    for (const auto& s : out.scalars) env[s] = 0;
    std::vector<std::pair<std::string, std::int64_t>> pinned;
    for (size_t d = 0; d + 1 < out.dims.size(); d++) {
        std::int64_t lo = eval_affine(out.dims[d].lower, env);
        pinned.emplace_back(out.dims[d].name, lo);
        env[out.dims[d].name] = lo;
    }
    auto subst = [&](AffineExpr e) {
        for (const auto& [n, v] : pinned) {
            std::int64_t k = e.coeff(n);
            if (k) e = e + AffineExpr::lit(k * v) - AffineExpr::var(n).scaled(k);
        }
        return e;
    };
    inner.lower = subst(inner.lower);
    inner.upper = subst(inner.upper);
    out.dims = {inner};
    for (auto& st : out.body) {
        if (st.guard) {
            st.guard->lhs = subst(st.guard->lhs);
            st.guard->rhs = subst(st.guard->rhs);
        }
        for (auto& s : st.target.subscript) s = subst(s);
        std::function<void(Expr*)> walk = [&](Expr* e) {
            if (!e) return;
            for (auto& s : e->subscript) s = subst(s);
            walk(e->lhs.get());
            walk(e->rhs.get());
        };
        walk(st.expr.get());
    }
    return out;
}

namespace {

// Substitute name := replacement inside an affine expression.
AffineExpr subst_affine(const AffineExpr& e, const std::string& name,
                        const AffineExpr& repl) {
    std::int64_t k = e.coeff(name);
    if (!k) return e;
    AffineExpr out = e - AffineExpr::var(name).scaled(k);
    return out + repl.scaled(k);
}

void subst_statement(Statement& st, const std::string& name,
                     const AffineExpr& repl) {
    if (st.guard) {
        st.guard->lhs = subst_affine(st.guard->lhs, name, repl);
        st.guard->rhs = subst_affine(st.guard->rhs, name, repl);
    }
    for (auto& s : st.target.subscript) s = subst_affine(s, name, repl);
    std::function<void(Expr*)> walk = [&](Expr* e) {
        if (!e) return;
        if (e->kind == Expr::Kind::NameRef && e->name == name) {
            // name refs to the index stay affine only if replacement is a
            // single variable or constant; general case rebuilds a tree
            if (repl.terms.empty()) {
                e->kind = Expr::Kind::Literal;
                e->value = repl.constant;
                e->name.clear();
            } else {
                // build k*var + ... tree
                ExprPtr acc;
                for (const auto& [n, k] : repl.terms) {
                    ExprPtr t = Expr::ref(n);
                    if (k != 1) t = Expr::bin('*', Expr::lit(k), std::move(t));
                    acc = acc ? Expr::bin('+', std::move(acc), std::move(t)) : std::move(t);
                }
                if (repl.constant)
                    acc = Expr::bin('+', std::move(acc), Expr::lit(repl.constant));
                *e = std::move(*acc);
            }
            return;
        }
        for (auto& s : e->subscript) s = subst_affine(s, name, repl);
        walk(e->lhs.get());
        walk(e->rhs.get());
    };
    walk(st.expr.get());
}

std::string fresh_name(const LoopNest& nest, std::string base) {
    std::set<std::string> taken;
    for (const auto& a : nest.arrays) taken.insert(a.name);
    for (const auto& d : nest.dims) taken.insert(d.name);
    for (const auto& s : nest.scalars) taken.insert(s);
    while (taken.count(base)) base += "_";
    return base;
}

} // namespace

LoopNest unroll(const LoopNest& nest, int factor) {
    if (factor < 1) throw SemanticError("unroll factor must be >= 1");
    if (factor == 1) return nest.clone();
    const LoopDim& inner = nest.dims.back();
    if (!inner.lower.is_constant() || !inner.upper.is_constant())
        throw SemanticError("unroll requires constant innermost bounds");
    std::int64_t lo = inner.lower.constant, up = inner.upper.constant;
    std::int64_t trip = up - lo;
    if (trip <= 0 || trip % factor != 0)
        throw SemanticError("unroll factor must divide the innermost trip count (" +
                            std::to_string(trip) + ")");

    LoopNest out = nest.clone();
    out.body.clear();
    LoopDim& nd = out.dims.back();
    nd.lower = AffineExpr::lit(0);
    nd.upper = AffineExpr::lit(trip / factor);
    for (int c = 0; c < factor; c++) {
        // original index = factor*new + lo + c
        AffineExpr repl = AffineExpr::var(inner.name).scaled(factor) +
                          AffineExpr::lit(lo + c);
        for (const auto& st : nest.body) {
            Statement s = st.clone();
            subst_statement(s, inner.name, repl);
            out.body.push_back(std::move(s));
        }
    }
    return out;
}

LoopNest flatten(const LoopNest& nest) {
    if (nest.dims.size() == 1 && nest.scalars.empty()) return nest.clone();
    if (!nest.scalars.empty())
        throw SemanticError("flatten: nest already carries scalars");

    std::int64_t total = trip_count(nest);
    if (total < 1) throw SemanticError("flatten: empty iteration space");
    // a zero-trip inner instantiation would break the wrap chain below
    {
        std::map<std::string, std::int64_t> env;
        bool bad = false;
        std::function<void(size_t)> walk = [&](size_t d) {
            if (d == nest.dims.size() || bad) return;
            std::int64_t lo = eval_affine(nest.dims[d].lower, env);
            std::int64_t up = eval_affine(nest.dims[d].upper, env);
            if (up <= lo) { bad = true; return; }
            for (std::int64_t v = lo; v < up && !bad; v++) {
                env[nest.dims[d].name] = v;
                walk(d + 1);
            }
            env.erase(nest.dims[d].name);
        };
        walk(0);
        if (bad)
            throw SemanticError("flatten: some inner loop has zero trips");
    }

    size_t m = nest.dims.size();
    LoopNest out;
    out.name = nest.name + "_flat";
    out.arrays = nest.arrays;

    std::string t = fresh_name(nest, "t");
    out.dims.push_back({t, AffineExpr::lit(0), AffineExpr::lit(total)});

    // per original dim: carried index scalar + advance temps
    std::vector<std::string> idx(m), adv(m), wrap(m);
    for (size_t d = 0; d < m; d++) {
        idx[d] = nest.dims[d].name;
        out.scalars.push_back(idx[d]);
    }
    for (size_t d = 0; d < m; d++) {
        adv[d] = fresh_name(out, nest.dims[d].name + "_n");
        out.scalars.push_back(adv[d]);
        wrap[d] = fresh_name(out, nest.dims[d].name + "_w");
        out.scalars.push_back(wrap[d]);
    }

    auto scalar_assign = [&](const std::string& name, ExprPtr value,
                             std::optional<Condition> guard) {
        Statement st;
        st.guard = std::move(guard);
        st.target.name = name;
        st.expr = std::move(value);
        return st;
    };

    // scalars start at 0; non-zero lower bounds need a first-iteration init,
    // outermost first so inner dynamic bounds see initialised outers
    for (size_t d = 0; d < m; d++) {
        const AffineExpr& lo = nest.dims[d].lower;
        if (lo.is_constant() && lo.constant == 0) continue;
        Condition c{AffineExpr::var(t), Rel::Eq, AffineExpr::lit(0)};
        ExprPtr v;
        for (const auto& [n, k] : lo.terms) {
            ExprPtr term = Expr::ref(n);
            if (k != 1) term = Expr::bin('*', Expr::lit(k), std::move(term));
            v = v ? Expr::bin('+', std::move(v), std::move(term)) : std::move(term);
        }
        if (!v || lo.constant)
            v = v ? Expr::bin('+', std::move(v), Expr::lit(lo.constant))
                  : Expr::lit(lo.constant);
        out.body.push_back(scalar_assign(idx[d], std::move(v), c));
    }

    for (const auto& st : nest.body) out.body.push_back(st.clone());

    // advance: innermost to outermost, all reading pre-update values
    for (size_t d = m; d-- > 0;) {
        ExprPtr carry = d + 1 == m ? Expr::lit(1) : Expr::ref(wrap[d + 1]);
        out.body.push_back(scalar_assign(
            adv[d], Expr::bin('+', Expr::ref(idx[d]), std::move(carry)),
            std::nullopt));
        out.body.push_back(scalar_assign(wrap[d], Expr::lit(0), std::nullopt));
        Condition hit{AffineExpr::var(adv[d]), Rel::Eq, nest.dims[d].upper};
        out.body.push_back(scalar_assign(wrap[d], Expr::lit(1), hit));
        out.body.push_back(scalar_assign(idx[d], Expr::ref(adv[d]), std::nullopt));
    }
    // wrap resets, outermost first so dynamic lower bounds see reset outers
    for (size_t d = 0; d < m; d++) {
        Condition wrapped{AffineExpr::var(wrap[d]), Rel::Eq, AffineExpr::lit(1)};
        ExprPtr lo;
        for (const auto& [n, k] : nest.dims[d].lower.terms) {
            ExprPtr term = Expr::ref(n);
            if (k != 1) term = Expr::bin('*', Expr::lit(k), std::move(term));
            lo = lo ? Expr::bin('+', std::move(lo), std::move(term)) : std::move(term);
        }
        if (!lo || nest.dims[d].lower.constant)
            lo = lo ? Expr::bin('+', std::move(lo), Expr::lit(nest.dims[d].lower.constant))
                    : Expr::lit(nest.dims[d].lower.constant);
        out.body.push_back(scalar_assign(idx[d], std::move(lo), wrapped));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Data generation + reference interpreter

MemImage gen_data(const LoopNest& nest, std::uint64_t seed, int size_words) {
    MemImage img;
    img.layout = compute_layout(nest);
    std::int64_t need = 0;
    for (const auto& [n, r] : img.layout) {
        (void)n;
        need = std::max(need, r.base + r.words());
    }
    if (need > size_words)
        throw SemanticError("arrays need " + std::to_string(need) +
                            " words, scratchpad has " + std::to_string(size_words));
    img.words.assign(size_t(size_words), 0);
    // engine output is portable; std distributions are not
    std::mt19937_64 rng(seed);
    for (const auto& a : nest.arrays) {
        const auto& r = img.layout[a.name];
        for (std::int64_t i = 0; i < r.words(); i++)
            img.words[size_t(r.base + i)] = std::int32_t(rng() % 33) - 16;
    }
    // unit diagonal keeps the forward-substitution division exact
    if (nest.name == "trisolv" || nest.name == "trisolv_flat") {
        auto it = img.layout.find("L");
        if (it != img.layout.end() && it->second.extents.size() == 2) {
            std::int64_t n = std::min(it->second.extents[0], it->second.extents[1]);
            for (std::int64_t i = 0; i < n; i++)
                img.words[size_t(it->second.base + i * it->second.extents[1] + i)] = 1;
        }
    }
    return img;
}

std::vector<std::string> output_arrays(const LoopNest& nest) {
    std::vector<std::string> out;
    for (const auto& a : nest.arrays)
        for (const auto& st : nest.body)
            if (!st.target.is_scalar() && st.target.name == a.name) {
                out.push_back(a.name);
                break;
            }
    return out;
}

namespace {

struct Interp {
    const LoopNest& nest;
    MemImage& mem;
    std::map<std::string, std::int64_t> env; // indices + scalars

    std::int64_t addr_of(const std::string& array,
                         const std::vector<AffineExpr>& subs,
                         const std::string& where) {
        const auto& r = mem.layout.at(array);
        std::int64_t addr = r.base, strideacc = 1;
        std::vector<std::int64_t> vals(subs.size());
        for (size_t k = 0; k < subs.size(); k++) vals[k] = eval_affine(subs[k], env);
        for (size_t k = subs.size(); k-- > 0;) {
            if (vals[k] < 0 || vals[k] >= r.extents[k])
                throw EvalError(nest.name + " " + where + ": subscript " +
                                std::to_string(vals[k]) + " out of bounds for " +
                                array + " dim " + std::to_string(k) + " at " +
                                iter_str(nest, env));
            addr += vals[k] * strideacc;
            strideacc *= r.extents[k];
        }
        return addr;
    }

    std::int32_t eval(const Expr& e) {
        switch (e.kind) {
        case Expr::Kind::Literal: return std::int32_t(e.value);
        case Expr::Kind::NameRef: return std::int32_t(env.at(e.name));
        case Expr::Kind::ArrayRef:
            return mem.words[size_t(addr_of(e.name, e.subscript, "load"))];
        case Expr::Kind::Binary: {
            std::int32_t l = eval(*e.lhs), r = eval(*e.rhs);
            switch (e.op) {
            case '+': return wrap_add(l, r);
            case '-': return wrap_sub(l, r);
            case '*': return wrap_mul(l, r);
            case '/':
                if (r == 0)
                    throw EvalError(nest.name + ": division by zero at " +
                                    iter_str(nest, env));
                return wrap_div(l, r);
            }
            throw SemanticError("bad operator");
        }
        }
        throw SemanticError("bad expression");
    }

    void exec_body() {
        for (const auto& st : nest.body) {
            if (st.guard &&
                !rel_holds(st.guard->rel, eval_affine(st.guard->lhs, env),
                           eval_affine(st.guard->rhs, env)))
                continue;
            std::int32_t v = eval(*st.expr);
            if (st.target.is_scalar())
                env[st.target.name] = v;
            else
                mem.words[size_t(addr_of(st.target.name, st.target.subscript,
                                         "store"))] = v;
        }
    }
};

} // namespace

MemImage reference_exec(const LoopNest& nest, const MemImage& input) {
    MemImage mem = input;
    if (mem.layout.empty()) mem.layout = compute_layout(nest);
    Interp it{nest, mem, {}};
    for (const auto& s : nest.scalars) it.env[s] = 0;
    enumerate(nest, it.env, 0, [&](auto&) { it.exec_body(); });
    return mem;
}

} // namespace gridmap
