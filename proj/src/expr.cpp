#include "nbsde/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "nbsde/errors.hpp"

namespace nbsde
{
namespace
{
using NodePtr = std::shared_ptr<ExprNode const>;

struct FunctionInfo
{
    std::string_view name;
    Function function;
    int arity;
};

constexpr std::array<FunctionInfo, 9> functions = {{
    {"sin", Function::sin, 1},
    {"cos", Function::cos, 1},
    {"exp", Function::exp, 1},
    {"log", Function::log, 1},
    {"sqrt", Function::sqrt, 1},
    {"abs", Function::abs, 1},
    {"tanh", Function::tanh, 1},
    {"min", Function::min, 2},
    {"max", Function::max, 2},
}};

std::string_view function_name(Function f)
{
    for (auto const& info : functions)
        if (info.function == f)
            return info.name;
    return "?";
}

NodePtr make_node(NodeKind kind, std::vector<NodePtr> children = {})
{
    auto node = std::make_shared<ExprNode>();
    node->kind = kind;
    node->children = std::move(children);
    return node;
}

NodePtr make_number(double value)
{
    auto node = std::make_shared<ExprNode>();
    node->kind = NodeKind::number;
    node->value = value;
    return node;
}

//---------------------------------------------------------------------------//
class Parser
{
  public:
    Parser(std::string_view src, VariableSet const& vars) : src_(src), vars_(vars) {}

    NodePtr parse()
    {
        NodePtr root = expression();
        skip_space();
        if (pos_ != src_.size())
            throw SyntaxError("unexpected '" + std::string(1, src_[pos_])
                                  + "', expected operator or end of input",
                              pos_);
        return root;
    }

  private:
    void skip_space()
    {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
    }

    bool accept(char c)
    {
        skip_space();
        if (pos_ < src_.size() && src_[pos_] == c)
        {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr expression()
    {
        NodePtr lhs = term();
        while (true)
        {
            if (accept('+'))
                lhs = make_node(NodeKind::add, {lhs, term()});
            else if (accept('-'))
                lhs = make_node(NodeKind::subtract, {lhs, term()});
            else
                return lhs;
        }
    }

    NodePtr term()
    {
        NodePtr lhs = unary();
        while (true)
        {
            if (accept('*'))
                lhs = make_node(NodeKind::multiply, {lhs, unary()});
            else if (accept('/'))
                lhs = make_node(NodeKind::divide, {lhs, unary()});
            else
                return lhs;
        }
    }

    NodePtr unary()
    {
        if (accept('-'))
            return make_node(NodeKind::negate, {unary()});
        return power();
    }

    NodePtr power()
    {
        NodePtr base = primary();
        if (accept('^'))
            return make_node(NodeKind::power, {base, unary()});
        return base;
    }

    NodePtr primary()
    {
        skip_space();
        if (pos_ >= src_.size())
            throw SyntaxError("expected operand", pos_);
        char const c = src_[pos_];
        if (c == '(')
        {
            ++pos_;
            NodePtr inner = expression();
            if (!accept(')'))
                throw SyntaxError("expected ')'", pos_);
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
            return identifier();
        throw SyntaxError(std::string("unexpected '") + c + "', expected operand", pos_);
    }

    NodePtr number()
    {
        std::size_t const start = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
        if (pos_ < src_.size() && src_[pos_] == '.')
        {
            ++pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                ++pos_;
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E'))
        {
            std::size_t p = pos_ + 1;
            if (p < src_.size() && (src_[p] == '+' || src_[p] == '-'))
                ++p;
            if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p])))
            {
                pos_ = p;
                while (pos_ < src_.size()
                       && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                    ++pos_;
            }
        }
        double value = 0;
        auto const [end, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, value);
        if (ec != std::errc() || end != src_.data() + pos_)
            throw SyntaxError("malformed number", start);
        return make_number(value);
    }

    // Parses the digits of x<k>/z<k>; returns -1 when the suffix is not a plain index.
    static int variable_index(std::string_view name)
    {
        if (name.size() < 2)
            return -1;
        int index = 0;
        auto const [end, ec]
            = std::from_chars(name.data() + 1, name.data() + name.size(), index);
        if (ec != std::errc() || end != name.data() + name.size() || name[1] == '0')
            return -1;
        return index;
    }

    NodePtr identifier()
    {
        std::size_t const start = pos_;
        while (pos_ < src_.size()
               && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        std::string_view const name = src_.substr(start, pos_ - start);

        for (auto const& info : functions)
        {
            if (info.name != name)
                continue;
            if (!accept('('))
                throw SyntaxError("expected '(' after function '" + std::string(name) + "'",
                                  pos_);
            std::vector<NodePtr> args;
            args.push_back(expression());
            while (accept(','))
                args.push_back(expression());
            if (!accept(')'))
                throw SyntaxError("expected ')' or ','", pos_);
            if (static_cast<int>(args.size()) != info.arity)
                throw ArityMismatch("function '" + std::string(name) + "' takes "
                                    + std::to_string(info.arity) + " argument(s), got "
                                    + std::to_string(args.size()) + " at offset "
                                    + std::to_string(start));
            auto node = std::make_shared<ExprNode>();
            node->kind = NodeKind::call;
            node->function = info.function;
            node->children = std::move(args);
            return node;
        }

        if (name == "pi")
            return make_number(std::numbers::pi);
        if (name == "y" && vars_.allow_y)
            return variable(NodeKind::var_y, 0);
        if (name[0] == 'x' || (name[0] == 'z' && vars_.allow_z))
        {
            int const k = variable_index(name);
            if (k >= 1 && k <= vars_.dimension)
                return variable(name[0] == 'x' ? NodeKind::var_x : NodeKind::var_z, k - 1);
        }
        throw UnknownIdentifier("unknown identifier '" + std::string(name) + "' at offset "
                                + std::to_string(start));
    }

    static NodePtr variable(NodeKind kind, int index)
    {
        auto node = std::make_shared<ExprNode>();
        node->kind = kind;
        node->index = index;
        return node;
    }

    std::string_view src_;
    VariableSet vars_;
    std::size_t pos_ = 0;
};

//---------------------------------------------------------------------------//
void print_node(ExprNode const& node, std::string& out)
{
    switch (node.kind)
    {
        case NodeKind::number: {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", node.value);
            out += buf;
            return;
        }
        case NodeKind::var_x:
            out += "x" + std::to_string(node.index + 1);
            return;
        case NodeKind::var_y:
            out += "y";
            return;
        case NodeKind::var_z:
            out += "z" + std::to_string(node.index + 1);
            return;
        case NodeKind::negate:
            out += "(-";
            print_node(*node.children[0], out);
            out += ")";
            return;
        case NodeKind::call:
            out += function_name(node.function);
            out += "(";
            for (std::size_t i = 0; i < node.children.size(); ++i)
            {
                if (i)
                    out += ", ";
                print_node(*node.children[i], out);
            }
            out += ")";
            return;
        default:
            break;
    }
    char op = '?';
    switch (node.kind)
    {
        case NodeKind::add: op = '+'; break;
        case NodeKind::subtract: op = '-'; break;
        case NodeKind::multiply: op = '*'; break;
        case NodeKind::divide: op = '/'; break;
        case NodeKind::power: op = '^'; break;
        default: break;
    }
    out += "(";
    print_node(*node.children[0], out);
    out += ' ';
    out += op;
    out += ' ';
    print_node(*node.children[1], out);
    out += ")";
}

bool nodes_equal(ExprNode const& a, ExprNode const& b)
{
    if (a.kind != b.kind || a.children.size() != b.children.size())
        return false;
    switch (a.kind)
    {
        case NodeKind::number:
            if (a.value != b.value)
                return false;
            break;
        case NodeKind::var_x:
        case NodeKind::var_z:
            if (a.index != b.index)
                return false;
            break;
        case NodeKind::call:
            if (a.function != b.function)
                return false;
            break;
        default:
            break;
    }
    for (std::size_t i = 0; i < a.children.size(); ++i)
        if (!nodes_equal(*a.children[i], *b.children[i]))
            return false;
    return true;
}

[[noreturn]] void domain_error(char const* what)
{
    throw DomainError(std::string("non-finite result in ") + what);
}

}  // namespace

//---------------------------------------------------------------------------//
Expr::Expr() : Expr(make_number(0.0)) {}

Expr::Expr(std::shared_ptr<ExprNode const> root) : root_(std::move(root))
{
    compile();
}

Expr Expr::constant(double value)
{
    return Expr(make_number(value));
}

bool Expr::is_zero_literal() const
{
    return root_->kind == NodeKind::number && root_->value == 0.0;
}

void Expr::compile()
{
    program_.clear();
    int depth = 0;
    max_depth_ = 0;
    auto emit = [&](auto&& self, ExprNode const& node) -> void {
        for (auto const& child : node.children)
            self(self, *child);
        program_.push_back({node.kind, node.function, node.value, node.index});
        if (node.kind == NodeKind::var_y)
            uses_y_ = true;
        if (node.kind == NodeKind::var_z)
            uses_z_ = true;
        depth += 1 - static_cast<int>(node.children.size());
        max_depth_ = std::max(max_depth_, depth);
    };
    emit(emit, *root_);
}

double Expr::eval(ExprEnv const& env) const
{
    constexpr int small = 32;
    double small_stack[small] = {};
    std::vector<double> big_stack;
    double* stack = small_stack;
    if (max_depth_ > small)
    {
        big_stack.resize(static_cast<std::size_t>(max_depth_));
        stack = big_stack.data();
    }
    int top = 0;
    for (Instr const& in : program_)
    {
        switch (in.kind)
        {
            case NodeKind::number:
                stack[top++] = in.value;
                break;
            case NodeKind::var_x:
                if (static_cast<std::size_t>(in.index) >= env.x.size())
                    throw UnboundVariable("x" + std::to_string(in.index + 1) + " is unbound");
                stack[top++] = env.x[static_cast<std::size_t>(in.index)];
                break;
            case NodeKind::var_y:
                if (!env.y)
                    throw UnboundVariable("y is unbound");
                stack[top++] = *env.y;
                break;
            case NodeKind::var_z:
                if (static_cast<std::size_t>(in.index) >= env.z.size())
                    throw UnboundVariable("z" + std::to_string(in.index + 1) + " is unbound");
                stack[top++] = env.z[static_cast<std::size_t>(in.index)];
                break;
            case NodeKind::negate:
                stack[top - 1] = -stack[top - 1];
                break;
            case NodeKind::add:
                --top;
                stack[top - 1] += stack[top];
                break;
            case NodeKind::subtract:
                --top;
                stack[top - 1] -= stack[top];
                break;
            case NodeKind::multiply:
                --top;
                stack[top - 1] *= stack[top];
                break;
            case NodeKind::divide:
                --top;
                stack[top - 1] /= stack[top];
                if (!std::isfinite(stack[top - 1]))
                    domain_error("division");
                break;
            case NodeKind::power:
                --top;
                stack[top - 1] = std::pow(stack[top - 1], stack[top]);
                if (!std::isfinite(stack[top - 1]))
                    domain_error("'^'");
                break;
            case NodeKind::call: {
                double& a = stack[top - (in.function == Function::min
                                                 || in.function == Function::max
                                             ? 2
                                             : 1)];
                switch (in.function)
                {
                    case Function::sin: a = std::sin(a); break;
                    case Function::cos: a = std::cos(a); break;
                    case Function::exp: a = std::exp(a); break;
                    case Function::log:
                        if (!(a > 0))
                            domain_error("log");
                        a = std::log(a);
                        break;
                    case Function::sqrt:
                        if (a < 0)
                            domain_error("sqrt");
                        a = std::sqrt(a);
                        break;
                    case Function::abs: a = std::abs(a); break;
                    case Function::tanh: a = std::tanh(a); break;
                    case Function::min:
                        a = std::min(a, stack[top - 1]);
                        --top;
                        break;
                    case Function::max:
                        a = std::max(a, stack[top - 1]);
                        --top;
                        break;
                }
                if (!std::isfinite(a))
                    domain_error(function_name(in.function).data());
                break;
            }
        }
    }
    return stack[0];
}

Expr parse_expr(std::string_view src, VariableSet const& vars)
{
    return Expr(Parser(src, vars).parse());
}

std::string to_string(Expr const& expr)
{
    std::string out;
    print_node(*expr.root(), out);
    return out;
}

bool structurally_equal(Expr const& a, Expr const& b)
{
    return nodes_equal(*a.root(), *b.root());
}

}  // namespace nbsde
