#pragma once

// Expression grammar for scale functions, densities and multipliers.
// Every node knows its value, one-sided first derivatives and the density of
// the absolutely continuous part of its second-derivative measure.

#include <memory>
#include <utility>
#include <vector>

namespace gdarb {

enum class ExprKind { Const, Affine, PowerSigned, ExpIntegral, Sum, Product, Compose, Piecewise, Tabulated };

class ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

class ExprNode {
public:
    virtual ~ExprNode() = default;
    virtual ExprKind kind() const = 0;
    virtual double eval(double x) const = 0;
    virtual double d_plus(double x) const = 0;
    virtual double d_minus(double x) const = 0;
    virtual double d2(double x) const = 0;
    // Points in [lo, hi] where derivatives may jump or blow up.
    virtual void special_points(double lo, double hi, std::vector<double>& out) const = 0;
    virtual bool in_domain(double) const { return true; }
};

struct ConstNode final : ExprNode {
    double c;
    explicit ConstNode(double c_) : c(c_) {}
    ExprKind kind() const override { return ExprKind::Const; }
    double eval(double) const override { return c; }
    double d_plus(double) const override { return 0.0; }
    double d_minus(double) const override { return 0.0; }
    double d2(double) const override { return 0.0; }
    void special_points(double, double, std::vector<double>&) const override {}
};

struct AffineNode final : ExprNode {
    double a, b;
    AffineNode(double a_, double b_) : a(a_), b(b_) {}
    ExprKind kind() const override { return ExprKind::Affine; }
    double eval(double x) const override { return a * x + b; }
    double d_plus(double) const override { return a; }
    double d_minus(double) const override { return a; }
    double d2(double) const override { return 0.0; }
    void special_points(double, double, std::vector<double>&) const override {}
};

// sign(x - center) * |x - center|^p. Negative p is accepted for densities.
struct PowerSignedNode final : ExprNode {
    double center, p;
    PowerSignedNode(double c_, double p_) : center(c_), p(p_) {}
    ExprKind kind() const override { return ExprKind::PowerSigned; }
    double eval(double x) const override;
    double d_plus(double x) const override;
    double d_minus(double x) const override { return d_plus(x); }
    double d2(double x) const override;
    void special_points(double lo, double hi, std::vector<double>& out) const override;
};

// x -> int_anchor^x exp(int_anchor^y mu(z) dz) dy
struct ExpIntegralNode final : ExprNode {
    Expr mu;
    double anchor;
    ExpIntegralNode(Expr mu_, double anchor_) : mu(std::move(mu_)), anchor(anchor_) {}
    ExprKind kind() const override { return ExprKind::ExpIntegral; }
    double eval(double x) const override;
    double d_plus(double x) const override;
    double d_minus(double x) const override { return d_plus(x); }
    double d2(double x) const override;
    void special_points(double lo, double hi, std::vector<double>& out) const override;
    double inner(double x) const;
};

struct SumNode final : ExprNode {
    std::vector<Expr> terms;
    explicit SumNode(std::vector<Expr> t) : terms(std::move(t)) {}
    ExprKind kind() const override { return ExprKind::Sum; }
    double eval(double x) const override;
    double d_plus(double x) const override;
    double d_minus(double x) const override;
    double d2(double x) const override;
    void special_points(double lo, double hi, std::vector<double>& out) const override;
    bool in_domain(double x) const override;
};

struct ProductNode final : ExprNode {
    std::vector<Expr> factors;
    explicit ProductNode(std::vector<Expr> f) : factors(std::move(f)) {}
    ExprKind kind() const override { return ExprKind::Product; }
    double eval(double x) const override;
    double d_plus(double x) const override;
    double d_minus(double x) const override;
    double d2(double x) const override;
    void special_points(double lo, double hi, std::vector<double>& out) const override;
    bool in_domain(double x) const override;

private:
    double first(double x, bool plus) const;
};

struct ComposeNode final : ExprNode {
    Expr outer, inner;
    ComposeNode(Expr o, Expr i) : outer(std::move(o)), inner(std::move(i)) {}
    ExprKind kind() const override { return ExprKind::Compose; }
    double eval(double x) const override { return outer->eval(inner->eval(x)); }
    double d_plus(double x) const override;
    double d_minus(double x) const override;
    double d2(double x) const override;
    void special_points(double lo, double hi, std::vector<double>& out) const override;
    bool in_domain(double x) const override;
};

// pieces[j] is used on [breakpoints[j-1], breakpoints[j]).
struct PiecewiseNode final : ExprNode {
    std::vector<double> breakpoints;
    std::vector<Expr> pieces;
    PiecewiseNode(std::vector<double> b, std::vector<Expr> p) : breakpoints(std::move(b)), pieces(std::move(p)) {}
    ExprKind kind() const override { return ExprKind::Piecewise; }
    double eval(double x) const override;
    double d_plus(double x) const override;
    double d_minus(double x) const override;
    double d2(double x) const override;
    void special_points(double lo, double hi, std::vector<double>& out) const override;
    bool in_domain(double x) const override;
    std::size_t right_index(double x) const;
    std::size_t left_index(double x) const;
};

// Monotone piecewise-linear interpolation through sorted samples.
struct TabulatedNode final : ExprNode {
    std::vector<double> xs, ys;
    TabulatedNode(std::vector<double> x, std::vector<double> y) : xs(std::move(x)), ys(std::move(y)) {}
    ExprKind kind() const override { return ExprKind::Tabulated; }
    double eval(double x) const override;
    double d_plus(double x) const override;
    double d_minus(double x) const override;
    double d2(double) const override { return 0.0; }
    void special_points(double lo, double hi, std::vector<double>& out) const override;
    bool in_domain(double x) const override { return x >= xs.front() && x <= xs.back(); }
};

Expr make_const(double c);
Expr make_affine(double a, double b);
Expr make_power_signed(double center, double p);
Expr make_exp_integral(Expr mu, double anchor = 0.0);
Expr make_sum(std::vector<Expr> terms);
Expr make_product(std::vector<Expr> factors);
Expr make_compose(Expr outer, Expr inner);
Expr make_piecewise(std::vector<double> breakpoints, std::vector<Expr> pieces);
Expr make_tabulated(std::vector<std::pair<double, double>> samples);

// a*(x-c)^2 + b*(x-c) + d, built from the grammar.
Expr make_quadratic(double a, double b, double c, double d);

// Throws Error(Domain) when x is outside the node's domain.
double eval(const Expr& f, double x);

// Values of adjacent pieces agree at every breakpoint (relative 1e-9).
bool is_continuous(const Expr& f, double rel_tol = 1e-9);

}  // namespace gdarb
