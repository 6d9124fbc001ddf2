#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nbsde
{
//! Which free variables an expression may reference.
struct VariableSet
{
    int dimension = 2;      //!< x1..xN (and z1..zN when allowed)
    bool allow_y = false;
    bool allow_z = false;
};

//! Variable bindings for evaluation. Empty spans and an empty optional are unbound.
struct ExprEnv
{
    std::span<double const> x;
    std::optional<double> y;
    std::span<double const> z;
};

enum class NodeKind
{
    number,
    var_x,
    var_y,
    var_z,
    negate,
    add,
    subtract,
    multiply,
    divide,
    power,
    call,
};

enum class Function
{
    sin,
    cos,
    exp,
    log,
    sqrt,
    abs,
    tanh,
    min,
    max,
};

struct ExprNode
{
    NodeKind kind;
    double value = 0;   //!< number literal
    int index = 0;      //!< zero-based variable index
    Function function = Function::sin;
    std::vector<std::shared_ptr<ExprNode const>> children;
};

//---------------------------------------------------------------------------//
/*!
 * Immutable arithmetic expression over x1..xN, y, z1..zN.
 *
 * Parsing builds a tree and compiles it into a postfix program used by
 * eval(). Evaluation raises DomainError on any non-finite intermediate
 * (sqrt or log of a negative, log(0), division by zero, overflow).
 */
class Expr
{
  public:
    Expr();  //!< the constant 0

    static Expr constant(double value);

    double eval(ExprEnv const& env) const;
    std::shared_ptr<ExprNode const> const& root() const { return root_; }
    bool is_zero_literal() const;
    bool uses_y() const { return uses_y_; }
    bool uses_z() const { return uses_z_; }

    friend Expr parse_expr(std::string_view src, VariableSet const& vars);

  private:
    explicit Expr(std::shared_ptr<ExprNode const> root);
    void compile();

    struct Instr
    {
        NodeKind kind;
        Function function;
        double value;
        int index;
    };

    std::shared_ptr<ExprNode const> root_;
    std::vector<Instr> program_;
    int max_depth_ = 0;
    bool uses_y_ = false;
    bool uses_z_ = false;
};

/*!
 * Parse infix text.
 *
 * Precedence from tightest: '^' (right-associative, exponent may carry a
 * unary minus), unary '-', then '*' '/', then '+' '-'. The constant `pi` is
 * accepted and folded into a literal.
 */
Expr parse_expr(std::string_view src, VariableSet const& vars);

//! Fully parenthesized text that parses back to an identical tree.
std::string to_string(Expr const& expr);

bool structurally_equal(Expr const& a, Expr const& b);

}  // namespace nbsde
