#pragma once

#include <pplp/error.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pplp
{

enum class BinningMethod
{
    EqualWidth,
    EqualFrequency,
    EntropyDistance
};

inline std::string_view to_string(BinningMethod m)
{
    switch (m) {
    case BinningMethod::EqualWidth:
        return "ew";
    case BinningMethod::EqualFrequency:
        return "ef";
    case BinningMethod::EntropyDistance:
        return "distance";
    }
    return "?";
}

/// Cutpoints cp_0 < ... < cp_l spanning [x_min, x_max].
struct Discretization
{
    BinningMethod method = BinningMethod::EqualWidth;
    std::vector<double> cutpoints;
    std::size_t requested_bins = 0; // 0: automatic stop
    bool truncated = false;         // fewer bins than requested were achievable
    bool forced = false;            // splits continued past the point where distance stopped improving

    std::size_t bins() const { return cutpoints.empty() ? 0 : cutpoints.size() - 1; }
};

namespace detail
{

inline std::vector<double> sorted_finite(std::span<const double> data)
{
    std::vector<double> xs(data.begin(), data.end());
    for (double x : xs)
        if (!std::isfinite(x))
            throw DegenerateInput("data contains non-finite values");
    if (!std::is_sorted(xs.begin(), xs.end()))
        std::sort(xs.begin(), xs.end());
    return xs;
}

inline std::size_t distinct_count(const std::vector<double>& sorted)
{
    if (sorted.empty())
        return 0;
    std::size_t d = 1;
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i] != sorted[i - 1])
            ++d;
    return d;
}

} // namespace detail

inline Discretization equal_width(std::span<const double> data, std::size_t l)
{
    if (l < 1)
        throw DegenerateInput("equal-width binning needs at least one bin");
    const auto xs = detail::sorted_finite(data);
    if (detail::distinct_count(xs) < 2)
        throw DegenerateInput("equal-width binning needs at least two distinct values");
    const double lo = xs.front(), hi = xs.back();
    const double width = (hi - lo) / static_cast<double>(l);
    Discretization d{BinningMethod::EqualWidth, {}, l};
    d.cutpoints.reserve(l + 1);
    for (std::size_t i = 0; i < l; ++i)
        d.cutpoints.push_back(lo + width * static_cast<double>(i));
    d.cutpoints.push_back(hi);
    for (std::size_t i = 1; i < d.cutpoints.size(); ++i)
        if (!(d.cutpoints[i - 1] < d.cutpoints[i]))
            throw DegenerateInput("equal-width cutpoints collapse at this resolution");
    return d;
}

/// Interior cutpoint i sits at the floor(i*n/l)-th order statistic (1-based); bins are
/// (cp_{i-1}, cp_i], the first one closed. A cutpoint inside a run of ties, or one that would
/// not advance past the previous cutpoint, moves to the midpoint between the tied value and the
/// next distinct value; if that is still impossible the two bins merge.
inline Discretization equal_frequency(std::span<const double> data, std::size_t l)
{
    if (l < 1)
        throw DegenerateInput("equal-frequency binning needs at least one bin");
    const auto xs = detail::sorted_finite(data);
    const std::size_t n = xs.size();
    if (detail::distinct_count(xs) < 2)
        throw DegenerateInput("equal-frequency binning needs at least two distinct values");
    if (l > detail::distinct_count(xs))
        throw DegenerateInput("more bins requested than distinct values (" + std::to_string(l) + " > " +
                              std::to_string(detail::distinct_count(xs)) + ")");

    Discretization d{BinningMethod::EqualFrequency, {xs.front()}, l};
    const double hi = xs.back();
    for (std::size_t i = 1; i < l; ++i) {
        const std::size_t m = i * n / l; // 1-based order statistic
        if (m == 0)
            continue;
        const double v = xs[m - 1];
        const double prev = d.cutpoints.back();
        double cut = v;
        if ((m < n && xs[m] == v) || v <= prev) {
            auto next = std::upper_bound(xs.begin(), xs.end(), v);
            if (next == xs.end())
                continue;
            cut = 0.5 * (v + *next);
        }
        if (cut <= prev || cut >= hi)
            continue;
        d.cutpoints.push_back(cut);
    }
    d.cutpoints.push_back(hi);
    d.truncated = d.bins() < l;
    return d;
}

struct LabelledValue
{
    double value;
    int label;
};

namespace detail
{

/// Joint class counts per bin -> Mantaras distance 1 - I(C;P) / H(C,P).
inline double mantaras(const std::vector<std::vector<double>>& joint, double n)
{
    if (joint.empty() || n <= 0)
        return 0.0;
    const std::size_t nc = joint.front().size();
    std::vector<double> pc(nc, 0.0);
    double hj = 0.0, hp = 0.0, hc = 0.0;
    for (const auto& row : joint) {
        double pb = 0.0;
        for (std::size_t c = 0; c < nc; ++c) {
            const double p = row[c] / n;
            pb += p;
            pc[c] += p;
            if (p > 0)
                hj -= p * std::log2(p);
        }
        if (pb > 0)
            hp -= pb * std::log2(pb);
    }
    for (double p : pc)
        if (p > 0)
            hc -= p * std::log2(p);
    if (hj <= 0.0)
        return 0.0;
    return 1.0 - (hc + hp - hj) / hj;
}

} // namespace detail

/// Greedy supervised binning by the Mantaras distance. Candidate cutpoints are midpoints between
/// consecutive distinct values unless both values carry a single, identical class. With l = 0 the
/// splitting stops once no split lowers the distance; otherwise it continues to l bins or until
/// candidates run out (flagging `truncated`).
inline Discretization entropy_distance(std::span<const LabelledValue> data, std::size_t l)
{
    if (data.empty())
        throw DegenerateInput("supervised binning needs data");
    std::vector<LabelledValue> xs(data.begin(), data.end());
    for (const auto& x : xs)
        if (!std::isfinite(x.value) || x.label < 0)
            throw DegenerateInput("supervised binning needs finite values and non-negative labels");
    std::stable_sort(xs.begin(), xs.end(), [](const auto& a, const auto& b) { return a.value < b.value; });

    int n_classes = 0;
    for (const auto& x : xs)
        n_classes = std::max(n_classes, x.label + 1);

    // groups of equal values with their class counts
    std::vector<double> values;
    std::vector<std::vector<double>> counts;
    for (const auto& x : xs) {
        if (values.empty() || values.back() != x.value) {
            values.push_back(x.value);
            counts.emplace_back(n_classes, 0.0);
        }
        counts.back()[x.label] += 1.0;
    }
    const std::size_t g = values.size();
    if (g < 2)
        throw DegenerateInput("supervised binning needs at least two distinct values");

    auto pure_label = [&](std::size_t i) {
        int lab = -1;
        for (int c = 0; c < n_classes; ++c)
            if (counts[i][c] > 0) {
                if (lab >= 0)
                    return -1;
                lab = c;
            }
        return lab;
    };
    // boundary b separates group b-1 and group b
    std::vector<bool> candidate(g, false);
    for (std::size_t b = 1; b < g; ++b) {
        const int l1 = pure_label(b - 1), l2 = pure_label(b);
        candidate[b] = !(l1 >= 0 && l1 == l2);
    }

    // prefix class counts over groups
    std::vector<std::vector<double>> prefix(g + 1, std::vector<double>(n_classes, 0.0));
    for (std::size_t i = 0; i < g; ++i)
        for (int c = 0; c < n_classes; ++c)
            prefix[i + 1][c] = prefix[i][c] + counts[i][c];
    auto range_counts = [&](std::size_t s, std::size_t e) {
        std::vector<double> r(n_classes);
        for (int c = 0; c < n_classes; ++c)
            r[c] = prefix[e][c] - prefix[s][c];
        return r;
    };
    const double n = static_cast<double>(xs.size());

    std::vector<std::size_t> bounds{0, g}; // bins are [bounds[i], bounds[i+1]) in group indices
    auto joint_of = [&](const std::vector<std::size_t>& bs) {
        std::vector<std::vector<double>> j;
        for (std::size_t i = 0; i + 1 < bs.size(); ++i)
            j.push_back(range_counts(bs[i], bs[i + 1]));
        return j;
    };

    Discretization d{BinningMethod::EntropyDistance, {}, l};
    double current = detail::mantaras(joint_of(bounds), n);
    while (l == 0 || bounds.size() - 1 < l) {
        double best = 0.0;
        std::size_t best_b = 0;
        for (std::size_t b = 1; b < g; ++b) {
            if (!candidate[b] || std::binary_search(bounds.begin(), bounds.end(), b))
                continue;
            auto trial = bounds;
            trial.insert(std::upper_bound(trial.begin(), trial.end(), b), b);
            const double dist = detail::mantaras(joint_of(trial), n);
            if (best_b == 0 || dist < best) {
                best = dist;
                best_b = b;
            }
        }
        if (best_b == 0)
            break;
        if (l == 0 && !(best < current))
            break;
        if (best >= current)
            d.forced = true;
        bounds.insert(std::upper_bound(bounds.begin(), bounds.end(), best_b), best_b);
        current = best;
    }

    d.cutpoints.push_back(values.front());
    for (std::size_t i = 1; i + 1 < bounds.size(); ++i)
        d.cutpoints.push_back(0.5 * (values[bounds[i] - 1] + values[bounds[i]]));
    d.cutpoints.push_back(values.back());
    d.truncated = l != 0 && d.bins() < l;
    return d;
}

} // namespace pplp
