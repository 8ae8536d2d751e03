#pragma once

#include <pplp/polynomial.hpp>

#include <cstddef>
#include <map>
#include <span>
#include <utility>
#include <vector>

namespace pplp
{

/// Axis-aligned box, one closed interval per dimension.
struct HyperCube
{
    std::vector<Interval> bounds;

    std::size_t dimension() const { return bounds.size(); }

    bool contains(std::span<const double> x) const
    {
        for (std::size_t j = 0; j < bounds.size(); ++j)
            if (!bounds[j].contains(x[j]))
                return false;
        return true;
    }

    friend bool operator==(const HyperCube&, const HyperCube&) = default;
};

inline HyperCube intersect(const HyperCube& a, const HyperCube& b)
{
    if (a.dimension() != b.dimension())
        throw ContractError("hyper-cube dimension mismatch");
    HyperCube r;
    r.bounds.reserve(a.dimension());
    for (std::size_t j = 0; j < a.dimension(); ++j)
        r.bounds.push_back({std::max(a.bounds[j].lo, b.bounds[j].lo), std::min(a.bounds[j].hi, b.bounds[j].hi)});
    return r;
}

inline bool has_volume(const HyperCube& c)
{
    for (const auto& iv : c.bounds)
        if (!(iv.lo < iv.hi))
            return false;
    return true;
}

/// Sparse polynomial in m variables: exponent tuple -> coefficient.
class MultivariatePolynomial
{
public:
    using Exponents = std::vector<unsigned>;

    MultivariatePolynomial() = default;
    explicit MultivariatePolynomial(std::size_t dim) : dim_(dim) {}

    static MultivariatePolynomial constant(std::size_t dim, double c)
    {
        MultivariatePolynomial p(dim);
        p.add_term(Exponents(dim, 0), c);
        return p;
    }

    static MultivariatePolynomial variable(std::size_t dim, std::size_t j)
    {
        MultivariatePolynomial p(dim);
        Exponents e(dim, 0);
        e.at(j) = 1;
        p.add_term(std::move(e), 1.0);
        return p;
    }

    /// Lifts a univariate polynomial into variable j.
    static MultivariatePolynomial from_univariate(std::size_t dim, std::size_t j, const Polynomial& p)
    {
        const Polynomial q = p.with_origin(0.0);
        MultivariatePolynomial r(dim);
        for (std::size_t e = 0; e < q.coefficients().size(); ++e) {
            Exponents ex(dim, 0);
            ex.at(j) = static_cast<unsigned>(e);
            r.add_term(std::move(ex), q.coefficients()[e]);
        }
        return r;
    }

    void add_term(Exponents e, double c)
    {
        if (e.size() != dim_)
            throw ContractError("monomial dimension mismatch");
        if (c == 0.0)
            return;
        auto [it, inserted] = terms_.try_emplace(std::move(e), c);
        if (!inserted) {
            it->second += c;
            if (it->second == 0.0)
                terms_.erase(it);
        }
    }

    std::size_t dimension() const { return dim_; }
    const std::map<Exponents, double>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    unsigned total_degree() const
    {
        unsigned d = 0;
        for (const auto& [e, c] : terms_) {
            unsigned s = 0;
            for (auto x : e)
                s += x;
            d = std::max(d, s);
        }
        return d;
    }

    double operator()(std::span<const double> x) const
    {
        if (x.size() != dim_)
            throw ContractError("evaluation point dimension mismatch");
        double acc = 0.0;
        for (const auto& [e, c] : terms_) {
            double m = c;
            for (std::size_t j = 0; j < dim_; ++j)
                for (unsigned k = 0; k < e[j]; ++k)
                    m *= x[j];
            acc += m;
        }
        return acc;
    }

    MultivariatePolynomial scaled(double s) const
    {
        MultivariatePolynomial r(dim_);
        for (const auto& [e, c] : terms_)
            r.add_term(e, c * s);
        return r;
    }

    friend MultivariatePolynomial operator+(const MultivariatePolynomial& a, const MultivariatePolynomial& b)
    {
        check_dims(a, b);
        MultivariatePolynomial r = a;
        for (const auto& [e, c] : b.terms_)
            r.add_term(e, c);
        return r;
    }

    friend MultivariatePolynomial operator-(const MultivariatePolynomial& a, const MultivariatePolynomial& b)
    {
        return a + b.scaled(-1.0);
    }

    friend MultivariatePolynomial operator*(const MultivariatePolynomial& a, const MultivariatePolynomial& b)
    {
        check_dims(a, b);
        MultivariatePolynomial r(a.dim_);
        for (const auto& [ea, ca] : a.terms_)
            for (const auto& [eb, cb] : b.terms_) {
                Exponents e(a.dim_);
                for (std::size_t j = 0; j < a.dim_; ++j)
                    e[j] = ea[j] + eb[j];
                r.add_term(std::move(e), ca * cb);
            }
        return r;
    }

    friend bool operator==(const MultivariatePolynomial&, const MultivariatePolynomial&) = default;

private:
    static void check_dims(const MultivariatePolynomial& a, const MultivariatePolynomial& b)
    {
        if (a.dim_ != b.dim_)
            throw ContractError("polynomial dimension mismatch");
    }

    std::size_t dim_ = 0;
    std::map<Exponents, double> terms_;
};

inline MultivariatePolynomial pow(const MultivariatePolynomial& p, unsigned n)
{
    MultivariatePolynomial r = MultivariatePolynomial::constant(p.dimension(), 1.0);
    for (unsigned i = 0; i < n; ++i)
        r = r * p;
    return r;
}

/// Exact integral over a bounded box, monomial by monomial.
inline double integrate(const MultivariatePolynomial& p, const HyperCube& box)
{
    if (box.dimension() != p.dimension())
        throw ContractError("box dimension does not match polynomial dimension");
    for (const auto& iv : box.bounds)
        if (std::isnan(iv.lo) || std::isnan(iv.hi) || iv.lo > iv.hi)
            throw InvalidInterval(iv.lo, iv.hi);
    if (!has_volume(box) || p.is_zero())
        return 0.0;
    double total = 0.0;
    for (const auto& [e, c] : p.terms()) {
        double term = c;
        for (std::size_t j = 0; j < e.size() && term != 0.0; ++j) {
            std::vector<double> mono(e[j] + 1, 0.0);
            mono.back() = 1.0;
            term *= integrate_poly(Polynomial(std::move(mono)), box.bounds[j].lo, box.bounds[j].hi);
        }
        total += term;
    }
    return total;
}

/// Multivariate piecewise polynomial over interior-disjoint hyper-cubes, zero elsewhere.
class MultivariatePP
{
public:
    struct Piece
    {
        HyperCube cube;
        MultivariatePolynomial poly;

        friend bool operator==(const Piece&, const Piece&) = default;
    };

    MultivariatePP() = default;

    MultivariatePP(std::size_t dim, std::vector<Piece> pieces)
        : dim_(dim)
        , pieces_(std::move(pieces))
    {
        for (const auto& p : pieces_) {
            if (p.cube.dimension() != dim_ || p.poly.dimension() != dim_)
                throw ContractError("piece dimension mismatch");
            for (const auto& iv : p.cube.bounds)
                if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || !(iv.lo < iv.hi))
                    throw ContractError("piece cubes must be bounded with positive width");
        }
        for (std::size_t a = 0; a < pieces_.size(); ++a)
            for (std::size_t b = a + 1; b < pieces_.size(); ++b)
                if (has_volume(intersect(pieces_[a].cube, pieces_[b].cube)))
                    throw ContractError("piece cubes overlap");
    }

    std::size_t dimension() const { return dim_; }
    std::span<const Piece> pieces() const { return pieces_; }

    double operator()(std::span<const double> x) const
    {
        for (const auto& p : pieces_)
            if (p.cube.contains(x))
                return p.poly(x);
        return 0.0;
    }

    friend bool operator==(const MultivariatePP&, const MultivariatePP&) = default;

private:
    std::size_t dim_ = 0;
    std::vector<Piece> pieces_;
};

/// Integral of f over `box`; infinite box ends clamp to each piece.
inline double integrate_box(const MultivariatePP& f, const HyperCube& box)
{
    if (box.dimension() != f.dimension())
        throw ContractError("box dimension does not match density dimension");
    for (const auto& iv : box.bounds)
        if (std::isnan(iv.lo) || std::isnan(iv.hi) || iv.lo > iv.hi)
            throw InvalidInterval(iv.lo, iv.hi);
    double total = 0.0;
    for (const auto& p : f.pieces()) {
        const HyperCube c = intersect(p.cube, box);
        if (has_volume(c))
            total += integrate(p.poly, c);
    }
    return total;
}

} // namespace pplp
