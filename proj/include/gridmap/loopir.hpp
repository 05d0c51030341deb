#pragma once
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace gridmap {

// Linear combination of loop indices / carried scalars plus a constant.
// Terms are kept sorted by name with no zero coefficients.
struct AffineExpr {
    std::vector<std::pair<std::string, std::int64_t>> terms;
    std::int64_t constant = 0;

    bool operator==(const AffineExpr&) const = default;
    bool is_constant() const { return terms.empty(); }
    std::int64_t coeff(const std::string& n) const;

    static AffineExpr lit(std::int64_t c);
    static AffineExpr var(const std::string& n);
    AffineExpr operator+(const AffineExpr& o) const;
    AffineExpr operator-(const AffineExpr& o) const;
    AffineExpr scaled(std::int64_t k) const;
    std::string str() const;
};

enum class Rel { Eq, Ne, Lt, Le, Gt, Ge };
const char* rel_name(Rel r);
bool rel_holds(Rel r, std::int64_t lhs, std::int64_t rhs);

// Statement-body expression tree. Subscripts are affine; the tree itself can
// mix array reads with arbitrary +,-,*,/ arithmetic.
struct Expr;
using ExprPtr = std::unique_ptr<Expr>;
struct Expr {
    enum class Kind { Literal, NameRef, ArrayRef, Binary };
    Kind kind = Kind::Literal;
    std::int64_t value = 0;               // Literal
    std::string name;                     // NameRef (index/scalar) or array name
    std::vector<AffineExpr> subscript;    // ArrayRef
    char op = 0;                          // Binary: + - * /
    ExprPtr lhs, rhs;

    static ExprPtr lit(std::int64_t v);
    static ExprPtr ref(const std::string& n);
    static ExprPtr array(const std::string& n, std::vector<AffineExpr> subs);
    static ExprPtr bin(char op, ExprPtr l, ExprPtr r);
    ExprPtr clone() const;
};

struct Condition {
    AffineExpr lhs;
    Rel rel = Rel::Eq;
    AffineExpr rhs;
};

struct ArrayDecl {
    std::string name;
    std::vector<std::int64_t> extents;
    std::int64_t words() const;
};

// Assignment target: array element, or a carried scalar (flatten-introduced).
struct Target {
    std::string name;
    std::vector<AffineExpr> subscript; // empty => scalar
    bool is_scalar() const { return subscript.empty(); }
};

struct Statement {
    std::optional<Condition> guard;
    Target target;
    ExprPtr expr;
    Statement clone() const;
};

struct LoopDim {
    std::string name;
    AffineExpr lower; // inclusive, may reference outer indices
    AffineExpr upper; // exclusive, may reference outer indices
};

// Perfect affine loop nest. `scalars` are integer variables carried across
// iterations (initialised to 0); plain kernels have none, flattening
// introduces them for the collapsed outer indices.
struct LoopNest {
    std::string name;
    std::vector<ArrayDecl> arrays;
    std::vector<std::string> scalars;
    std::vector<LoopDim> dims; // outermost first, at least 1
    std::vector<Statement> body;
    LoopNest clone() const;
};

struct ArrayRegion {
    std::int64_t base = 0;
    std::vector<std::int64_t> extents;
    std::int64_t words() const;
};

// Flat scratchpad image. Arrays live row-major, declaration order, from 0.
struct MemImage {
    std::vector<std::int32_t> words;
    std::map<std::string, ArrayRegion> layout;
};

std::map<std::string, ArrayRegion> compute_layout(const LoopNest& nest);

// --- text form -------------------------------------------------------------
LoopNest parse_kernel(const std::string& text);      // throws ParseError/SemanticError
LoopNest parse_kernel_file(const std::string& path);

// --- builtins ---------------------------------------------------------------
// gemm | atax | gesummv | mvt | trisolv, square size n >= 1.
LoopNest builtin_kernel(const std::string& name, int n);
const std::vector<std::string>& builtin_kernel_names();

// --- transforms ------------------------------------------------------------
LoopNest flatten(const LoopNest& nest);
LoopNest unroll(const LoopNest& nest, int factor);
LoopNest extract_innermost(const LoopNest& nest);

// Total number of innermost-statement executions (enumerates the index space).
std::int64_t trip_count(const LoopNest& nest);

// --- data + reference semantics ---------------------------------------------
MemImage gen_data(const LoopNest& nest, std::uint64_t seed,
                  int size_words = 1024);
MemImage reference_exec(const LoopNest& nest, const MemImage& input);

// Arrays that appear as statement targets, in declaration order.
std::vector<std::string> output_arrays(const LoopNest& nest);

// 32-bit wrapping helpers shared by interpreter and simulator.
std::int32_t wrap_add(std::int32_t a, std::int32_t b);
std::int32_t wrap_sub(std::int32_t a, std::int32_t b);
std::int32_t wrap_mul(std::int32_t a, std::int32_t b);
std::int32_t wrap_div(std::int32_t a, std::int32_t b); // b!=0 checked by caller

} // namespace gridmap
