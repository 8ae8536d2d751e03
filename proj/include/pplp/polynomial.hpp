#pragma once

#include <pplp/error.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace pplp
{

inline constexpr double infinity = std::numeric_limits<double>::infinity();

/// Closed interval; either end may be infinite.
struct Interval
{
    double lo = -infinity;
    double hi = infinity;

    double width() const { return hi - lo; }
    bool contains(double x) const { return lo <= x && x <= hi; }
    bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }

    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Univariate polynomial  sum_j b_j (x - origin)^j.
///
/// The origin defaults to 0, which is the plain monomial form b_0 + b_1 x + ... + b_k x^k.
/// Learned densities anchor each piece at its interval midpoint; expanding narrow pieces
/// of high order around x = 0 cancels away most of the significant digits.
class Polynomial
{
public:
    Polynomial() : coeffs_{0.0} {}

    explicit Polynomial(std::vector<double> coeffs, double origin = 0.0)
        : coeffs_(std::move(coeffs))
        , origin_(origin)
    {
        if (coeffs_.empty())
            coeffs_.push_back(0.0);
        trim();
    }

    static Polynomial constant(double c) { return Polynomial({c}); }

    /// x, anchored at `origin`.
    static Polynomial identity(double origin = 0.0) { return Polynomial({origin, 1.0}, origin); }

    std::size_t order() const { return coeffs_.size() - 1; }
    std::span<const double> coefficients() const { return coeffs_; }
    double coefficient(std::size_t j) const { return j < coeffs_.size() ? coeffs_[j] : 0.0; }
    double origin() const { return origin_; }
    bool is_zero() const { return coeffs_.size() == 1 && coeffs_[0] == 0.0; }

    double operator()(double x) const
    {
        const double t = x - origin_;
        double acc = 0.0;
        for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it)
            acc = acc * t + *it;
        return acc;
    }

    /// Same polynomial re-expanded around `origin` (Taylor shift).
    Polynomial with_origin(double origin) const
    {
        if (origin == origin_)
            return *this;
        std::vector<double> a = coeffs_;
        const double d = origin - origin_;
        const std::size_t k = a.size() - 1;
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = k; j-- > i;)
                a[j] += d * a[j + 1];
        return Polynomial(std::move(a), origin);
    }

    Polynomial scaled(double s) const
    {
        auto a = coeffs_;
        for (auto& c : a)
            c *= s;
        return Polynomial(std::move(a), origin_);
    }

    friend bool operator==(const Polynomial&, const Polynomial&) = default;

private:
    void trim()
    {
        while (coeffs_.size() > 1 && coeffs_.back() == 0.0)
            coeffs_.pop_back();
    }

    std::vector<double> coeffs_;
    double origin_ = 0.0;
};

inline double evaluate(const Polynomial& p, double x) { return p(x); }

enum class ArithOp
{
    add,
    sub,
    mul
};

inline Polynomial poly_arith(const Polynomial& p, const Polynomial& q_in, ArithOp op)
{
    const Polynomial q = q_in.with_origin(p.origin());
    const auto a = p.coefficients();
    const auto b = q.coefficients();
    std::vector<double> out;
    switch (op) {
    case ArithOp::add:
    case ArithOp::sub: {
        const double sign = op == ArithOp::add ? 1.0 : -1.0;
        out.assign(std::max(a.size(), b.size()), 0.0);
        for (std::size_t i = 0; i < a.size(); ++i)
            out[i] += a[i];
        for (std::size_t i = 0; i < b.size(); ++i)
            out[i] += sign * b[i];
        break;
    }
    case ArithOp::mul:
        if (a.empty() || b.empty())
            break;
        out.assign(a.size() + b.size() - 1, 0.0);
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t j = 0; j < b.size(); ++j)
                out[i + j] += a[i] * b[j];
        break;
    }
    return Polynomial(std::move(out), p.origin());
}

inline Polynomial operator+(const Polynomial& p, const Polynomial& q) { return poly_arith(p, q, ArithOp::add); }
inline Polynomial operator-(const Polynomial& p, const Polynomial& q) { return poly_arith(p, q, ArithOp::sub); }
inline Polynomial operator*(const Polynomial& p, const Polynomial& q) { return poly_arith(p, q, ArithOp::mul); }
inline Polynomial operator-(const Polynomial& p) { return p.scaled(-1.0); }

inline Polynomial pow(const Polynomial& p, unsigned n)
{
    Polynomial r = Polynomial({1.0}, p.origin());
    for (unsigned i = 0; i < n; ++i)
        r = r * p;
    return r;
}

/// Exact definite integral over [a, b].
inline double integrate_poly(const Polynomial& p, double a, double b)
{
    if (std::isnan(a) || std::isnan(b) || a > b)
        throw InvalidInterval(a, b);
    if (a == b || p.is_zero())
        return 0.0;
    if (std::isinf(a) || std::isinf(b))
        throw ContractError("integral of a non-zero polynomial over an unbounded interval diverges");

    // (v^{j+1} - u^{j+1}) = (v - u) * sum_{i<=j} v^i u^{j-i}, accumulated incrementally.
    const double u = a - p.origin();
    const double v = b - p.origin();
    const double width = v - u;
    const auto c = p.coefficients();
    double sum = 0.0;
    double h = 1.0; // sum_{i<=j} v^i u^{j-i}
    double vpow = 1.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
        if (j > 0) {
            vpow *= v;
            h = h * u + vpow;
        }
        sum += c[j] * h / static_cast<double>(j + 1);
    }
    return width * sum;
}

/// Piecewise polynomial: piece i lives on [cp_i, cp_{i+1}], zero outside [cp_0, cp_l].
class PiecewisePolynomial
{
public:
    PiecewisePolynomial() = default;

    PiecewisePolynomial(std::vector<double> cutpoints, std::vector<Polynomial> pieces)
        : cutpoints_(std::move(cutpoints))
        , pieces_(std::move(pieces))
    {
        if (cutpoints_.size() < 2)
            throw ContractError("piecewise polynomial needs at least two cutpoints");
        if (pieces_.size() + 1 != cutpoints_.size())
            throw ContractError("piece count must equal cutpoint count - 1");
        for (std::size_t i = 0; i < cutpoints_.size(); ++i) {
            if (!std::isfinite(cutpoints_[i]))
                throw ContractError("cutpoints must be finite");
            if (i > 0 && !(cutpoints_[i - 1] < cutpoints_[i]))
                throw ContractError("cutpoints must be strictly increasing");
        }
    }

    std::size_t size() const { return pieces_.size(); }
    bool empty() const { return pieces_.empty(); }
    std::span<const double> cutpoints() const { return cutpoints_; }
    std::span<const Polynomial> pieces() const { return pieces_; }
    const Polynomial& piece(std::size_t i) const { return pieces_.at(i); }
    Interval support() const { return {cutpoints_.front(), cutpoints_.back()}; }
    Interval piece_interval(std::size_t i) const { return {cutpoints_.at(i), cutpoints_.at(i + 1)}; }

    /// Index of the piece containing x, or size() when x is outside the support.
    std::size_t locate(double x) const
    {
        if (empty() || x < cutpoints_.front() || x > cutpoints_.back())
            return size();
        auto it = std::upper_bound(cutpoints_.begin(), cutpoints_.end(), x);
        std::size_t i = static_cast<std::size_t>(it - cutpoints_.begin());
        return i == 0 ? 0 : std::min(i - 1, size() - 1);
    }

    double operator()(double x) const
    {
        const std::size_t i = locate(x);
        return i == size() ? 0.0 : pieces_[i](x);
    }

    friend bool operator==(const PiecewisePolynomial&, const PiecewisePolynomial&) = default;

private:
    std::vector<double> cutpoints_;
    std::vector<Polynomial> pieces_;
};

/// Integral of the piecewise function over [a, b]; infinite ends clamp to the support.
inline double integrate_piecewise(const PiecewisePolynomial& pp, double a, double b)
{
    if (std::isnan(a) || std::isnan(b) || a > b)
        throw InvalidInterval(a, b);
    if (pp.empty())
        return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < pp.size(); ++i) {
        const auto iv = pp.piece_interval(i);
        const double lo = std::max(a, iv.lo);
        const double hi = std::min(b, iv.hi);
        if (lo < hi)
            total += integrate_poly(pp.piece(i), lo, hi);
    }
    return total;
}

inline double total_mass(const PiecewisePolynomial& pp) { return integrate_piecewise(pp, -infinity, infinity); }

struct DensityCheck
{
    double mass = 0.0;
    double min_value = 0.0;
    double max_value = 0.0;
    bool valid = false;
};

/// Mass and sampled minimum of a candidate density.
inline DensityCheck check_density(const PiecewisePolynomial& pp, double mass_tol = 1e-9,
                                  double neg_tol = 1e-12, std::size_t samples_per_piece = 65)
{
    DensityCheck r;
    if (pp.empty())
        return r;
    r.mass = total_mass(pp);
    r.min_value = infinity;
    r.max_value = -infinity;
    for (std::size_t i = 0; i < pp.size(); ++i) {
        const auto iv = pp.piece_interval(i);
        for (std::size_t s = 0; s < samples_per_piece; ++s) {
            const double x = iv.lo + iv.width() * static_cast<double>(s) /
                                         static_cast<double>(samples_per_piece - 1);
            const double v = pp.piece(i)(x);
            r.min_value = std::min(r.min_value, v);
            r.max_value = std::max(r.max_value, v);
        }
    }
    r.valid = std::abs(r.mass - 1.0) <= mass_tol &&
              r.min_value >= -neg_tol * std::max(1.0, r.max_value);
    return r;
}

/// P(x not in [a, b]) for a valid density.
inline double complement_probability(const PiecewisePolynomial& pp, double a, double b)
{
    const auto chk = check_density(pp);
    if (!chk.valid)
        throw ContractError("complement requires a valid density (mass " + std::to_string(chk.mass) + ")");
    const double p = 1.0 - integrate_piecewise(pp, a, b);
    if (p < 0.0 && p > -1e-12)
        return 0.0;
    if (p > 1.0 && p < 1.0 + 1e-12)
        return 1.0;
    return p;
}

} // namespace pplp
