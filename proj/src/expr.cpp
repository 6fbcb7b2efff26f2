#include "gdarb/expr.hpp"

#include "gdarb/errors.hpp"
#include "quad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace gdarb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void clip_window(double& lo, double& hi) {
    lo = std::max(lo, -1e8);
    hi = std::min(hi, 1e8);
}

}  // namespace

// ---- PowerSigned ----

double PowerSignedNode::eval(double x) const {
    double t = x - center;
    if (t == 0.0) return p > 0 ? 0.0 : kInf;
    double v = std::pow(std::fabs(t), p);
    return t > 0 ? v : -v;
}

double PowerSignedNode::d_plus(double x) const {
    double t = x - center;
    if (t == 0.0) {
        if (p > 1.0) return 0.0;
        if (p == 1.0) return 1.0;
        return kInf;
    }
    return p * std::pow(std::fabs(t), p - 1.0);
}

double PowerSignedNode::d2(double x) const {
    double t = x - center;
    if (t == 0.0) return (p == 1.0 || p >= 2.0) ? 0.0 : kInf;
    double v = p * (p - 1.0) * std::pow(std::fabs(t), p - 2.0);
    return t > 0 ? v : -v;
}

void PowerSignedNode::special_points(double lo, double hi, std::vector<double>& out) const {
    if (center >= lo && center <= hi && p != 1.0) out.push_back(center);
}

// ---- ExpIntegral ----

namespace {

std::vector<double> split_points(const Expr& mu, double a, double b) {
    std::vector<double> pts{a};
    double lo = std::min(a, b), hi = std::max(a, b);
    std::vector<double> sp;
    double clo = lo, chi = hi;
    clip_window(clo, chi);
    mu->special_points(clo, chi, sp);
    std::sort(sp.begin(), sp.end());
    if (a <= b) {
        for (double s : sp)
            if (s > a && s < b) pts.push_back(s);
    } else {
        for (auto it = sp.rbegin(); it != sp.rend(); ++it)
            if (*it < a && *it > b) pts.push_back(*it);
    }
    pts.push_back(b);
    return pts;
}

template <class F>
double piecewise_integral(F&& f, const std::vector<double>& pts, double rel, const char* what) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        auto r = detail::integrate(f, pts[i], pts[i + 1], rel, 1e-14);
        if (!r.ok) {
            std::ostringstream os;
            os << what << " quadrature did not converge on [" << pts[i] << ", " << pts[i + 1] << "]";
            fail(ErrorKind::Quadrature, os.str());
        }
        total += r.value;
    }
    return total;
}

}  // namespace

double ExpIntegralNode::inner(double x) const {
    if (x == anchor) return 0.0;
    auto f = [this](double z) { return mu->eval(z); };
    return piecewise_integral(f, split_points(mu, anchor, x), 1e-10, "exp_integral inner");
}

double ExpIntegralNode::eval(double x) const {
    if (x == anchor) return 0.0;
    auto g = [this](double y) { return std::exp(inner(y)); };
    return piecewise_integral(g, split_points(mu, anchor, x), 1e-10, "exp_integral outer");
}

double ExpIntegralNode::d_plus(double x) const { return std::exp(inner(x)); }

double ExpIntegralNode::d2(double x) const { return mu->eval(x) * std::exp(inner(x)); }

void ExpIntegralNode::special_points(double lo, double hi, std::vector<double>& out) const {
    mu->special_points(lo, hi, out);
}

// ---- Sum ----

double SumNode::eval(double x) const {
    double s = 0.0;
    for (const auto& t : terms) s += t->eval(x);
    return s;
}
double SumNode::d_plus(double x) const {
    double s = 0.0;
    for (const auto& t : terms) s += t->d_plus(x);
    return s;
}
double SumNode::d_minus(double x) const {
    double s = 0.0;
    for (const auto& t : terms) s += t->d_minus(x);
    return s;
}
double SumNode::d2(double x) const {
    double s = 0.0;
    for (const auto& t : terms) s += t->d2(x);
    return s;
}
void SumNode::special_points(double lo, double hi, std::vector<double>& out) const {
    for (const auto& t : terms) t->special_points(lo, hi, out);
}
bool SumNode::in_domain(double x) const {
    return std::all_of(terms.begin(), terms.end(), [x](const Expr& t) { return t->in_domain(x); });
}

// ---- Product ----

double ProductNode::eval(double x) const {
    double p = 1.0;
    for (const auto& f : factors) p *= f->eval(x);
    return p;
}

double ProductNode::first(double x, bool plus) const {
    const std::size_t n = factors.size();
    std::vector<double> v(n), d(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = factors[i]->eval(x);
        d[i] = plus ? factors[i]->d_plus(x) : factors[i]->d_minus(x);
    }
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (d[i] == 0.0) continue;
        double term = d[i];
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) term *= v[j];
        s += term;
    }
    return s;
}

double ProductNode::d_plus(double x) const { return first(x, true); }
double ProductNode::d_minus(double x) const { return first(x, false); }

double ProductNode::d2(double x) const {
    const std::size_t n = factors.size();
    std::vector<double> v(n), d(n), dd(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = factors[i]->eval(x);
        d[i] = factors[i]->d_plus(x);
        dd[i] = factors[i]->d2(x);
    }
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (dd[i] != 0.0) {
            double term = dd[i];
            for (std::size_t k = 0; k < n; ++k)
                if (k != i) term *= v[k];
            s += term;
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || d[i] == 0.0 || d[j] == 0.0) continue;
            double term = d[i] * d[j];
            for (std::size_t k = 0; k < n; ++k)
                if (k != i && k != j) term *= v[k];
            s += term;
        }
    }
    return s;
}

void ProductNode::special_points(double lo, double hi, std::vector<double>& out) const {
    for (const auto& f : factors) f->special_points(lo, hi, out);
}
bool ProductNode::in_domain(double x) const {
    return std::all_of(factors.begin(), factors.end(), [x](const Expr& t) { return t->in_domain(x); });
}

// ---- Compose ----

double ComposeNode::d_plus(double x) const {
    double h = inner->d_plus(x);
    if (h == 0.0) return 0.0;
    double y = inner->eval(x);
    return (h > 0 ? outer->d_plus(y) : outer->d_minus(y)) * h;
}

double ComposeNode::d_minus(double x) const {
    double h = inner->d_minus(x);
    if (h == 0.0) return 0.0;
    double y = inner->eval(x);
    return (h > 0 ? outer->d_minus(y) : outer->d_plus(y)) * h;
}

double ComposeNode::d2(double x) const {
    double y = inner->eval(x);
    double h1 = inner->d_plus(x);
    double h2 = inner->d2(x);
    double s = 0.0;
    if (h1 != 0.0) s += outer->d2(y) * h1 * h1;
    if (h2 != 0.0) s += outer->d_plus(y) * h2;
    return s;
}

void ComposeNode::special_points(double lo, double hi, std::vector<double>& out) const {
    clip_window(lo, hi);
    inner->special_points(lo, hi, out);
    const int n = 256;
    std::vector<double> xs(n + 1), ys(n + 1);
    double ymin = kInf, ymax = -kInf;
    for (int i = 0; i <= n; ++i) {
        xs[i] = lo + (hi - lo) * i / n;
        ys[i] = inner->eval(xs[i]);
        ymin = std::min(ymin, ys[i]);
        ymax = std::max(ymax, ys[i]);
    }
    std::vector<double> osp;
    if (std::isfinite(ymin) && std::isfinite(ymax)) outer->special_points(ymin, ymax, osp);
    for (double target : osp) {
        for (int i = 0; i < n; ++i) {
            double f0 = ys[i] - target, f1 = ys[i + 1] - target;
            if (f0 == 0.0) {
                out.push_back(xs[i]);
                continue;
            }
            if (f0 * f1 > 0) continue;
            double a = xs[i], b = xs[i + 1], fa = f0;
            for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::fabs(a)); ++it) {
                double m = 0.5 * (a + b);
                double fm = inner->eval(m) - target;
                if ((fm > 0) == (fa > 0)) {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            out.push_back(0.5 * (a + b));
        }
    }
}

bool ComposeNode::in_domain(double x) const {
    return inner->in_domain(x) && outer->in_domain(inner->eval(x));
}

// ---- Piecewise ----

std::size_t PiecewiseNode::right_index(double x) const {
    return static_cast<std::size_t>(std::upper_bound(breakpoints.begin(), breakpoints.end(), x) - breakpoints.begin());
}
std::size_t PiecewiseNode::left_index(double x) const {
    return static_cast<std::size_t>(std::lower_bound(breakpoints.begin(), breakpoints.end(), x) - breakpoints.begin());
}
double PiecewiseNode::eval(double x) const { return pieces[right_index(x)]->eval(x); }
double PiecewiseNode::d_plus(double x) const { return pieces[right_index(x)]->d_plus(x); }
double PiecewiseNode::d_minus(double x) const { return pieces[left_index(x)]->d_minus(x); }
double PiecewiseNode::d2(double x) const { return pieces[right_index(x)]->d2(x); }

void PiecewiseNode::special_points(double lo, double hi, std::vector<double>& out) const {
    for (std::size_t j = 0; j < pieces.size(); ++j) {
        double a = j == 0 ? -kInf : breakpoints[j - 1];
        double b = j == breakpoints.size() ? kInf : breakpoints[j];
        double l = std::max(lo, a), h = std::min(hi, b);
        if (l <= h) pieces[j]->special_points(l, h, out);
    }
    for (double b : breakpoints)
        if (b >= lo && b <= hi) out.push_back(b);
}

bool PiecewiseNode::in_domain(double x) const { return pieces[right_index(x)]->in_domain(x); }

// ---- Tabulated ----

double TabulatedNode::eval(double x) const {
    if (!in_domain(x)) {
        std::ostringstream os;
        os << "tabulated: x=" << x << " outside [" << xs.front() << ", " << xs.back() << "]";
        fail(ErrorKind::Domain, os.str());
    }
    std::size_t k = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin());
    if (k == 0) k = 1;
    if (k >= xs.size()) k = xs.size() - 1;
    double w = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    return ys[k - 1] + w * (ys[k] - ys[k - 1]);
}

double TabulatedNode::d_plus(double x) const {
    std::size_t k = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin());
    if (k == 0) k = 1;
    if (k >= xs.size()) k = xs.size() - 1;
    return (ys[k] - ys[k - 1]) / (xs[k] - xs[k - 1]);
}

double TabulatedNode::d_minus(double x) const {
    std::size_t k = static_cast<std::size_t>(std::lower_bound(xs.begin(), xs.end(), x) - xs.begin());
    if (k == 0) k = 1;
    if (k >= xs.size()) k = xs.size() - 1;
    return (ys[k] - ys[k - 1]) / (xs[k] - xs[k - 1]);
}

void TabulatedNode::special_points(double lo, double hi, std::vector<double>& out) const {
    for (double x : xs)
        if (x >= lo && x <= hi) out.push_back(x);
}

// ---- factories ----

Expr make_const(double c) {
    if (!std::isfinite(c)) fail(ErrorKind::Parse, "const: value must be finite");
    return std::make_shared<ConstNode>(c);
}

Expr make_affine(double a, double b) {
    if (!std::isfinite(a) || !std::isfinite(b)) fail(ErrorKind::Parse, "affine: coefficients must be finite");
    return std::make_shared<AffineNode>(a, b);
}

Expr make_power_signed(double center, double p) {
    if (!std::isfinite(center) || !std::isfinite(p) || p == 0.0)
        fail(ErrorKind::Parse, "power_signed: need finite center and nonzero finite p");
    return std::make_shared<PowerSignedNode>(center, p);
}

Expr make_exp_integral(Expr mu, double anchor) {
    if (!mu) fail(ErrorKind::Parse, "exp_integral: missing mu");
    if (!std::isfinite(anchor)) fail(ErrorKind::Parse, "exp_integral: anchor must be finite");
    return std::make_shared<ExpIntegralNode>(std::move(mu), anchor);
}

Expr make_sum(std::vector<Expr> terms) {
    if (terms.empty()) fail(ErrorKind::Parse, "sum: empty term list");
    return std::make_shared<SumNode>(std::move(terms));
}

Expr make_product(std::vector<Expr> factors) {
    if (factors.empty()) fail(ErrorKind::Parse, "product: empty factor list");
    return std::make_shared<ProductNode>(std::move(factors));
}

Expr make_compose(Expr outer, Expr inner) {
    if (!outer || !inner) fail(ErrorKind::Parse, "compose: missing operand");
    return std::make_shared<ComposeNode>(std::move(outer), std::move(inner));
}

Expr make_piecewise(std::vector<double> breakpoints, std::vector<Expr> pieces) {
    if (pieces.size() != breakpoints.size() + 1)
        fail(ErrorKind::Parse, "piecewise: need exactly one more piece than breakpoints");
    for (std::size_t i = 0; i < breakpoints.size(); ++i) {
        if (!std::isfinite(breakpoints[i])) fail(ErrorKind::Parse, "piecewise: breakpoints must be finite");
        if (i > 0 && !(breakpoints[i] > breakpoints[i - 1]))
            fail(ErrorKind::Parse, "piecewise: breakpoints must be strictly increasing");
    }
    return std::make_shared<PiecewiseNode>(std::move(breakpoints), std::move(pieces));
}

Expr make_tabulated(std::vector<std::pair<double, double>> samples) {
    if (samples.size() < 2) fail(ErrorKind::Parse, "tabulated: need at least two samples");
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!std::isfinite(samples[i].first) || !std::isfinite(samples[i].second))
            fail(ErrorKind::Parse, "tabulated: samples must be finite");
        if (i > 0 && !(samples[i].first > samples[i - 1].first))
            fail(ErrorKind::Parse, "tabulated: x samples must be strictly increasing");
        xs.push_back(samples[i].first);
        ys.push_back(samples[i].second);
    }
    return std::make_shared<TabulatedNode>(std::move(xs), std::move(ys));
}

Expr make_quadratic(double a, double b, double c, double d) {
    Expr lin = make_affine(b, d - b * c);
    if (a == 0.0) return lin;
    Expr sq = make_product({make_const(a), make_affine(1.0, -c), make_affine(1.0, -c)});
    return make_sum({sq, lin});
}

double eval(const Expr& f, double x) {
    if (!f->in_domain(x)) {
        std::ostringstream os;
        os << "x=" << x << " outside expression domain";
        fail(ErrorKind::Domain, os.str());
    }
    return f->eval(x);
}

bool is_continuous(const Expr& f, double rel_tol) {
    switch (f->kind()) {
        case ExprKind::Piecewise: {
            const auto& p = static_cast<const PiecewiseNode&>(*f);
            for (std::size_t j = 0; j < p.breakpoints.size(); ++j) {
                double b = p.breakpoints[j];
                double l = p.pieces[j]->eval(b), r = p.pieces[j + 1]->eval(b);
                if (std::fabs(l - r) > rel_tol * std::max({1.0, std::fabs(l), std::fabs(r)})) return false;
            }
            for (const auto& q : p.pieces)
                if (!is_continuous(q, rel_tol)) return false;
            return true;
        }
        case ExprKind::Sum:
            for (const auto& t : static_cast<const SumNode&>(*f).terms)
                if (!is_continuous(t, rel_tol)) return false;
            return true;
        case ExprKind::Product:
            for (const auto& t : static_cast<const ProductNode&>(*f).factors)
                if (!is_continuous(t, rel_tol)) return false;
            return true;
        case ExprKind::Compose: {
            const auto& c = static_cast<const ComposeNode&>(*f);
            return is_continuous(c.outer, rel_tol) && is_continuous(c.inner, rel_tol);
        }
        case ExprKind::PowerSigned:
            return static_cast<const PowerSignedNode&>(*f).p > 0;
        default:
            return true;
    }
}

}  // namespace gdarb
