#pragma once

#include <pplp/discretize.hpp>
#include <pplp/polynomial.hpp>
#include <pplp/spline.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace pplp
{

/// A fitted piecewise-polynomial density and the configuration that produced it.
struct DensityModel
{
    Discretization discretization;
    std::size_t degree = 0;
    std::vector<double> weights;       // mixture weights on the simplex
    std::vector<double> masses;        // integral of each basis function
    std::vector<double> coefficients;  // weights[i] / masses[i]
    PiecewisePolynomial density;
    double log_likelihood = 0.0;
    double bic = 0.0;
    std::size_t n = 0;
    std::size_t iterations = 0;
    std::vector<double> trace;         // log-likelihood after each EM step, starting point first

    std::size_t parameters() const { return weights.size(); }
};

struct EmOptions
{
    std::size_t max_iterations = 500;
    double tolerance = 1e-9;
};

/// BIC as a score to maximize: logL - (p - 1)/2 ln n.
inline double bic_score(double log_likelihood, std::size_t parameters, std::size_t n)
{
    if (n == 0)
        throw ContractError("BIC needs at least one observation");
    if (parameters == 0)
        throw ContractError("BIC needs at least one parameter");
    return log_likelihood - 0.5 * static_cast<double>(parameters - 1) * std::log(static_cast<double>(n));
}

inline double bic_score(const DensityModel& m) { return bic_score(m.log_likelihood, m.parameters(), m.n); }

/// Maximum-likelihood mixture of normalized basis functions by multiplicative EM updates.
/// The result is expressed in the basis' own coordinates.
inline DensityModel fit_coefficients(const SplineBasis& basis, std::span<const double> data,
                                     const EmOptions& opt = {})
{
    if (data.empty())
        throw ContractError("fitting needs at least one observation");
    const double lo = basis.breakpoints.front(), hi = basis.breakpoints.back();
    const std::size_t p = basis.size();
    const std::size_t m = basis.degree + 1;
    const std::size_t n = data.size();

    // per point: first basis index and the m normalized basis values
    std::vector<std::size_t> first(n);
    std::vector<double> vals(n * m);
    for (std::size_t j = 0; j < n; ++j) {
        const double x = data[j];
        if (!(x >= lo && x <= hi))
            throw ContractError("observation outside the spline support");
        const std::size_t s = basis.knot_span(x);
        first[j] = s - basis.degree;
        std::span<double> out(vals.data() + j * m, m);
        basis.nonzero(x, s, out);
        for (std::size_t r = 0; r < m; ++r)
            out[r] /= basis.masses[first[j] + r];
    }

    std::vector<double> w(p, 1.0 / static_cast<double>(p));
    std::vector<double> acc(p);
    auto step = [&](const std::vector<double>& weights, std::vector<double>& resp) {
        std::fill(resp.begin(), resp.end(), 0.0);
        double ll = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double* v = vals.data() + j * m;
            const std::size_t f = first[j];
            double fx = 0.0;
            for (std::size_t r = 0; r < m; ++r)
                fx += weights[f + r] * v[r];
            ll += std::log(fx);
            const double inv = 1.0 / fx;
            for (std::size_t r = 0; r < m; ++r)
                resp[f + r] += weights[f + r] * v[r] * inv;
        }
        return ll;
    };

    DensityModel model;
    double ll = step(w, acc);
    model.trace.push_back(ll);
    std::size_t it = 0;
    while (it < opt.max_iterations) {
        std::vector<double> next(p);
        for (std::size_t i = 0; i < p; ++i)
            next[i] = acc[i] / static_cast<double>(n);
        const double ll_next = step(next, acc);
        ++it;
        model.trace.push_back(ll_next);
        w = std::move(next);
        const double gain = ll_next - ll;
        ll = ll_next;
        if (gain < opt.tolerance)
            break;
    }

    // renormalize against rounding drift so the mixture stays on the simplex
    double wsum = 0.0;
    for (double x : w)
        wsum += x;
    for (auto& x : w)
        x /= wsum;

    model.discretization.cutpoints = basis.breakpoints;
    model.discretization.requested_bins = basis.spans();
    model.degree = basis.degree;
    model.weights = w;
    model.masses = basis.masses;
    model.coefficients.resize(p);
    for (std::size_t i = 0; i < p; ++i)
        model.coefficients[i] = w[i] / basis.masses[i];

    std::vector<Polynomial> pieces;
    for (std::size_t j = 0; j < basis.spans(); ++j) {
        const double mid = 0.5 * (basis.breakpoints[j] + basis.breakpoints[j + 1]);
        Polynomial acc_poly({0.0}, mid);
        for (std::size_t i = 0; i < p; ++i) {
            const auto& piece = basis.functions[i].piece(j);
            if (!piece.is_zero() && model.coefficients[i] != 0.0)
                acc_poly = acc_poly + piece.scaled(model.coefficients[i]).with_origin(mid);
        }
        pieces.push_back(std::move(acc_poly));
    }
    model.density = PiecewisePolynomial(basis.breakpoints, std::move(pieces));
    model.log_likelihood = ll;
    model.n = n;
    model.iterations = it;
    model.bic = bic_score(model);
    return model;
}

/// Fits one (discretization, degree) configuration: data are mapped affinely onto [0, 1],
/// fitted there, and the density is mapped back to attribute units.
inline DensityModel fit_density(const Discretization& disc, std::size_t degree, std::span<const double> data,
                                const EmOptions& opt = {})
{
    if (disc.bins() == 0)
        throw ContractError("fitting needs at least one bin");
    const double lo = disc.cutpoints.front(), hi = disc.cutpoints.back();
    const double scale = hi - lo;
    if (!(scale > 0.0))
        throw DegenerateInput("attribute range is empty");

    std::vector<double> unit_cuts(disc.cutpoints.size());
    for (std::size_t i = 0; i < unit_cuts.size(); ++i)
        unit_cuts[i] = (disc.cutpoints[i] - lo) / scale;
    unit_cuts.front() = 0.0;
    unit_cuts.back() = 1.0;
    std::vector<double> u(data.size());
    for (std::size_t j = 0; j < data.size(); ++j)
        u[j] = std::clamp((data[j] - lo) / scale, 0.0, 1.0);

    const SplineBasis basis = build_basis(unit_cuts, degree);
    DensityModel m = fit_coefficients(basis, u, opt);

    // back to attribute units: f(x) = g((x - lo) / scale) / scale
    std::vector<Polynomial> pieces;
    for (std::size_t j = 0; j < m.density.size(); ++j) {
        const auto& g = m.density.piece(j);
        std::vector<double> c(g.coefficients().begin(), g.coefficients().end());
        double f = 1.0 / scale;
        for (auto& cj : c) {
            cj *= f;
            f /= scale;
        }
        const double origin = 0.5 * (disc.cutpoints[j] + disc.cutpoints[j + 1]);
        pieces.emplace_back(std::move(c), origin);
    }
    m.density = PiecewisePolynomial(disc.cutpoints, std::move(pieces));
    m.discretization = disc;
    for (auto& mass : m.masses)
        mass *= scale;
    for (std::size_t i = 0; i < m.coefficients.size(); ++i)
        m.coefficients[i] = m.weights[i] / m.masses[i];
    const double shift = static_cast<double>(data.size()) * std::log(scale);
    m.log_likelihood -= shift;
    for (auto& t : m.trace)
        t -= shift;
    m.bic = bic_score(m);
    return m;
}

struct SearchOptions
{
    std::size_t max_size = 40;
    std::size_t max_order = 8;
    std::size_t min_size = 2;
    std::vector<BinningMethod> methods{BinningMethod::EqualWidth, BinningMethod::EqualFrequency};
    EmOptions em;
};

struct ConfigScore
{
    std::size_t bins;      // requested l
    BinningMethod method;
    std::size_t degree;
    double bic;
};

struct SearchResult
{
    DensityModel best;
    double pct_ef = 0.0;            // share of (l, k) pairs where equal-frequency beat equal-width
    std::vector<ConfigScore> scores; // in loop order
};

/// Grid search over bins l in [min_size, max_size], the given unsupervised methods (equal-width
/// before equal-frequency by default), degree k in [1, max_order]; the highest BIC wins, the first
/// one in loop order on ties.
inline SearchResult build_pp_structure(std::span<const double> data, const SearchOptions& opt = {})
{
    std::vector<double> xs = detail::sorted_finite(data);
    if (detail::distinct_count(xs) < 2)
        throw DegenerateInput("density learning needs at least two distinct values");
    if (opt.min_size < 1 || opt.max_size < opt.min_size || opt.max_order < 1 || opt.methods.empty())
        throw ContractError("search grid is empty");
    for (auto m : opt.methods)
        if (m == BinningMethod::EntropyDistance)
            throw ContractError("the entropy distance needs labels; use fit_supervised");

    SearchResult res;
    std::optional<DensityModel> best;
    std::size_t ef_wins = 0, pairs = 0;
    for (std::size_t l = opt.min_size; l <= opt.max_size; ++l) {
        std::vector<double> ew_bic(opt.max_order + 1, -std::numeric_limits<double>::infinity());
        for (BinningMethod method : opt.methods) {
            Discretization disc;
            try {
                disc = method == BinningMethod::EqualWidth ? equal_width(xs, l) : equal_frequency(xs, l);
            } catch (const DegenerateInput&) {
                continue;
            }
            for (std::size_t k = 1; k <= opt.max_order; ++k) {
                DensityModel m = fit_density(disc, k, xs, opt.em);
                res.scores.push_back({l, method, k, m.bic});
                if (method == BinningMethod::EqualWidth) {
                    ew_bic[k] = m.bic;
                } else if (std::isfinite(ew_bic[k])) {
                    ++pairs;
                    if (m.bic > ew_bic[k])
                        ++ef_wins;
                }
                if (!best || m.bic > best->bic)
                    best = std::move(m);
            }
        }
    }
    if (!best)
        throw DegenerateInput("no configuration could be fitted");
    res.best = std::move(*best);
    res.pct_ef = pairs == 0 ? 0.0 : 100.0 * static_cast<double>(ef_wins) / static_cast<double>(pairs);
    return res;
}

/// Supervised variant: cutpoints by the entropy distance, degree chosen by BIC. A single
/// achievable bin yields the uniform density.
inline DensityModel fit_supervised(std::span<const LabelledValue> data, std::size_t bins, std::size_t max_order,
                                   const EmOptions& opt = {})
{
    const Discretization disc = entropy_distance(data, bins);
    std::vector<double> xs;
    xs.reserve(data.size());
    for (const auto& d : data)
        xs.push_back(d.value);
    std::sort(xs.begin(), xs.end());
    if (disc.bins() == 1)
        return fit_density(disc, 0, xs, opt);
    std::optional<DensityModel> best;
    for (std::size_t k = 1; k <= std::max<std::size_t>(1, max_order); ++k) {
        DensityModel m = fit_density(disc, k, xs, opt);
        if (!best || m.bic > best->bic)
            best = std::move(m);
    }
    return std::move(*best);
}

} // namespace pplp
