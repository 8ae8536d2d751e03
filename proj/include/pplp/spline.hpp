#pragma once

#include <pplp/discretize.hpp>
#include <pplp/polynomial.hpp>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace pplp
{

/// Clamped B-spline basis of a given degree over a set of breakpoints.
struct SplineBasis
{
    std::size_t degree = 0;
    std::vector<double> breakpoints;             // cp_0 < ... < cp_l
    std::vector<double> knots;                   // end knots repeated degree+1 times
    std::vector<PiecewisePolynomial> functions;  // B_1..B_p over the breakpoints
    std::vector<double> masses;                  // integral of each B_i

    std::size_t size() const { return knots.size() - degree - 1; }
    std::size_t spans() const { return breakpoints.size() - 1; }

    /// Knot span containing x, as an index into `knots` (t_s <= x < t_{s+1}).
    std::size_t knot_span(double x) const
    {
        const std::size_t n = size(); // basis count
        if (x >= knots[n])
            return n - 1;
        if (x <= knots[degree])
            return degree;
        std::size_t lo = degree, hi = n;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (x < knots[mid])
                hi = mid;
            else
                lo = mid;
        }
        return lo;
    }

    /// Values of the degree+1 basis functions that can be non-zero at x, starting at index
    /// span - degree (Cox-de Boor triangle).
    void nonzero(double x, std::size_t span, std::span<double> out) const
    {
        double left[16], right[16];
        out[0] = 1.0;
        for (std::size_t j = 1; j < out.size() && j <= degree; ++j) {
            left[j] = x - knots[span + 1 - j];
            right[j] = knots[span + j] - x;
            double saved = 0.0;
            for (std::size_t r = 0; r < j; ++r) {
                const double tmp = out[r] / (right[r + 1] + left[j - r]);
                out[r] = saved + right[r + 1] * tmp;
                saved = left[j - r] * tmp;
            }
            out[j] = saved;
        }
    }

    /// B_i(x) by the recurrence, for checking and plotting.
    double value(std::size_t i, double x) const
    {
        if (x < breakpoints.front() || x > breakpoints.back())
            return 0.0;
        const std::size_t s = knot_span(x);
        if (i + degree < s || i > s)
            return 0.0;
        double vals[16];
        nonzero(x, s, std::span<double>(vals, degree + 1));
        return vals[i + degree - s];
    }
};

namespace detail
{

/// Solves V a = y for the (k+1)x(k+1) Vandermonde system at nodes s (partial pivoting).
inline std::vector<double> solve_vandermonde(const std::vector<double>& s, std::vector<double> y)
{
    const std::size_t m = s.size();
    std::vector<double> a(m * m);
    for (std::size_t r = 0; r < m; ++r) {
        double p = 1.0;
        for (std::size_t c = 0; c < m; ++c) {
            a[r * m + c] = p;
            p *= s[r];
        }
    }
    for (std::size_t col = 0; col < m; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < m; ++r)
            if (std::abs(a[r * m + col]) > std::abs(a[piv * m + col]))
                piv = r;
        if (piv != col) {
            for (std::size_t c = 0; c < m; ++c)
                std::swap(a[col * m + c], a[piv * m + c]);
            std::swap(y[col], y[piv]);
        }
        for (std::size_t r = col + 1; r < m; ++r) {
            const double f = a[r * m + col] / a[col * m + col];
            for (std::size_t c = col; c < m; ++c)
                a[r * m + c] -= f * a[col * m + c];
            y[r] -= f * y[col];
        }
    }
    std::vector<double> x(m);
    for (std::size_t r = m; r-- > 0;) {
        double v = y[r];
        for (std::size_t c = r + 1; c < m; ++c)
            v -= a[r * m + c] * x[c];
        x[r] = v / a[r * m + r];
    }
    return x;
}

} // namespace detail

/// Clamped basis over `cutpoints`: l + degree functions, each converted to monomial pieces
/// (anchored at span midpoints) by interpolation at degree+1 Chebyshev nodes per span.
inline SplineBasis build_basis(std::span<const double> cutpoints, std::size_t degree)
{
    if (cutpoints.size() < 2)
        throw ContractError("spline basis needs at least one interval");
    if (degree > 10)
        throw ContractError("spline degree is limited to 10");
    for (std::size_t i = 1; i < cutpoints.size(); ++i)
        if (!(cutpoints[i - 1] < cutpoints[i]))
            throw ContractError("cutpoints must be strictly increasing");

    SplineBasis b;
    b.degree = degree;
    b.breakpoints.assign(cutpoints.begin(), cutpoints.end());
    const std::size_t l = b.spans();
    for (std::size_t r = 0; r < degree; ++r)
        b.knots.push_back(cutpoints.front());
    b.knots.insert(b.knots.end(), cutpoints.begin(), cutpoints.end());
    for (std::size_t r = 0; r < degree; ++r)
        b.knots.push_back(cutpoints.back());
    const std::size_t p = l + degree;

    std::vector<std::vector<Polynomial>> pieces(p, std::vector<Polynomial>(l));
    const std::size_t m = degree + 1;
    std::vector<double> nodes(m);
    for (std::size_t r = 0; r < m; ++r)
        nodes[r] = m == 1 ? 0.0 : std::cos(std::numbers::pi * (2.0 * r + 1.0) / (2.0 * m));

    std::vector<double> vals(m);
    for (std::size_t j = 0; j < l; ++j) {
        const double a = cutpoints[j], c = cutpoints[j + 1];
        const double mid = 0.5 * (a + c), half = 0.5 * (c - a);
        const std::size_t span = j + degree;
        // samples[i][r]: value of basis span-degree+i at node r
        std::vector<std::vector<double>> samples(m, std::vector<double>(m));
        for (std::size_t r = 0; r < m; ++r) {
            b.nonzero(mid + half * nodes[r], span, vals);
            for (std::size_t i = 0; i < m; ++i)
                samples[i][r] = vals[i];
        }
        for (std::size_t i = 0; i < m; ++i) {
            auto coef = detail::solve_vandermonde(nodes, samples[i]);
            double scale = 1.0;
            for (auto& cc : coef) {
                cc /= scale;
                scale *= half;
            }
            pieces[span - degree + i][j] = Polynomial(std::move(coef), mid);
        }
    }
    for (std::size_t i = 0; i < p; ++i) {
        b.functions.emplace_back(b.breakpoints, std::move(pieces[i]));
        b.masses.push_back(total_mass(b.functions.back()));
    }
    return b;
}

inline SplineBasis build_basis(const Discretization& d, std::size_t degree)
{
    if (d.bins() == 0)
        throw ContractError("spline basis needs at least one bin");
    return build_basis(d.cutpoints, degree);
}

} // namespace pplp
