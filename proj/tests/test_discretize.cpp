#include <pplp/discretize.hpp>

#include <support/oracles.hpp>

#include <catch_amalgamated.hpp>

#include <bit>
#include <numeric>
#include <set>
#include <random>

using namespace pplp;

namespace
{

std::vector<double> iota_data(int from, int to)
{
    std::vector<double> v;
    for (int i = from; i <= to; ++i)
        v.push_back(i);
    return v;
}

// bins are (cp_{i-1}, cp_i], the first one closed
std::vector<int> occupancy(const Discretization& d, const std::vector<double>& xs)
{
    std::vector<int> occ(d.bins(), 0);
    for (double x : xs) {
        std::size_t i = 0;
        while (i + 1 < d.bins() && x > d.cutpoints[i + 1])
            ++i;
        ++occ[i];
    }
    return occ;
}

} // namespace

TEST_CASE("equal_width", "[discretize]")
{
    std::vector<double> data{0, 3, 7, 10};
    CHECK(equal_width(data, 5).cutpoints == std::vector<double>{0, 2, 4, 6, 8, 10});
    CHECK(equal_width(data, 1).cutpoints == std::vector<double>{0, 10});
    std::vector<double> sym{-1, 0.2, 1};
    CHECK(equal_width(sym, 4).cutpoints == std::vector<double>{-1, -0.5, 0, 0.5, 1});
    CHECK_THROWS_AS(equal_width(data, 0), DegenerateInput);
    std::vector<double> flat{2, 2, 2};
    CHECK_THROWS_AS(equal_width(flat, 2), DegenerateInput);
}

TEST_CASE("equal_frequency", "[discretize]")
{
    auto ten = iota_data(1, 10);
    CHECK(equal_frequency(ten, 2).cutpoints == std::vector<double>{1, 5, 10});
    auto nine = iota_data(1, 9);
    const auto d = equal_frequency(nine, 3);
    CHECK(d.cutpoints == std::vector<double>{1, 3, 6, 9});
    // exhaustive count balance of the index formula
    CHECK(occupancy(d, nine) == std::vector<int>{3, 3, 3});
    CHECK(equal_frequency(ten, 1).cutpoints == std::vector<double>{1, 10});
    std::vector<double> few{1, 2, 3};
    CHECK_THROWS_AS(equal_frequency(few, 4), DegenerateInput);
}

TEST_CASE("equal_frequency tie handling", "[discretize]")
{
    // the median lands inside a run of 5s: cut moves between 5 and the next distinct value
    std::vector<double> ties{1, 2, 5, 5, 5, 5, 8, 9};
    const auto d = equal_frequency(ties, 2);
    CHECK(d.cutpoints == std::vector<double>{1, 6.5, 9});
    // heavy ties force bins to merge
    std::vector<double> heavy{0, 0, 0, 0, 0, 0, 0, 1, 2};
    const auto m = equal_frequency(heavy, 3);
    CHECK(m.cutpoints.front() == 0);
    CHECK(m.cutpoints.back() == 2);
    CHECK(std::is_sorted(m.cutpoints.begin(), m.cutpoints.end()));
    CHECK(std::adjacent_find(m.cutpoints.begin(), m.cutpoints.end()) == m.cutpoints.end());
}

TEST_CASE("discretization properties on random data", "[discretize][property]")
{
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 5 + rng() % 300;
        std::vector<double> xs(n);
        std::normal_distribution<double> g(3.0, 2.0);
        for (auto& x : xs)
            x = g(rng);
        std::sort(xs.begin(), xs.end());
        const std::size_t l = 1 + rng() % std::min<std::size_t>(n - 1, 40);

        const auto ew = equal_width(xs, l);
        REQUIRE(ew.bins() == l);
        CHECK(ew.cutpoints.front() == xs.front());
        CHECK(ew.cutpoints.back() == xs.back());
        const double w0 = ew.cutpoints[1] - ew.cutpoints[0];
        for (std::size_t i = 1; i < ew.cutpoints.size(); ++i)
            CHECK(std::abs((ew.cutpoints[i] - ew.cutpoints[i - 1]) - w0) <= 1e-12 * std::abs(w0) * 16);

        const auto ef = equal_frequency(xs, l);
        CHECK(ef.cutpoints.front() == xs.front());
        CHECK(ef.cutpoints.back() == xs.back());
        CHECK(ef.bins() == l);
        const auto occ = occupancy(ef, xs);
        CHECK(*std::max_element(occ.begin(), occ.end()) - *std::min_element(occ.begin(), occ.end()) <= 1);
    }
}

TEST_CASE("entropy_distance examples", "[discretize]")
{
    std::vector<LabelledValue> data{{1, 0}, {2, 0}, {3, 1}, {4, 1}};
    const auto d = entropy_distance(data, 2);
    CHECK(d.cutpoints == std::vector<double>{1, 2.5, 4});
    CHECK_FALSE(d.truncated);

    // the oracle evaluates all three midpoints by the distance formula
    const std::vector<int> cls{0, 0, 1, 1};
    const double d15 = oracle::mantaras_distance({0, 1, 1, 1}, cls);
    const double d25 = oracle::mantaras_distance({0, 0, 1, 1}, cls);
    const double d35 = oracle::mantaras_distance({0, 0, 0, 1}, cls);
    CHECK(d25 < d15);
    CHECK(d25 < d35);

    std::vector<LabelledValue> same{{1, 0}, {2, 0}, {3, 0}};
    const auto s = entropy_distance(same, 2);
    CHECK(s.cutpoints == std::vector<double>{1, 3});
    CHECK(s.truncated);

    CHECK(entropy_distance(data, 1).cutpoints == std::vector<double>{1, 4});
}

TEST_CASE("entropy_distance auto stop", "[discretize]")
{
    std::vector<LabelledValue> data;
    for (int i = 0; i < 10; ++i)
        data.push_back({double(i), i < 5 ? 0 : 1});
    const auto d = entropy_distance(data, 0);
    CHECK(d.cutpoints == std::vector<double>{0, 4.5, 9});
    CHECK_FALSE(d.forced);
}

TEST_CASE("entropy_distance matches exhaustive search on small inputs", "[discretize][property]")
{
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng() % 11; // <= 12 points
        std::vector<LabelledValue> xs;
        for (std::size_t i = 0; i < n; ++i)
            xs.push_back({double(rng() % 9), int(rng() % 3)});
        std::sort(xs.begin(), xs.end(), [](auto& a, auto& b) { return a.value < b.value; });
        if (xs.front().value == xs.back().value)
            continue;

        // achievable maximum: request far more bins than candidates
        const auto full = entropy_distance(xs, 64);
        std::vector<double> cuts;
        const double best = oracle::best_distance_split(xs, full.bins(), cuts);
        std::vector<double> got(full.cutpoints.begin() + 1, full.cutpoints.end() - 1);
        CHECK(got == cuts);
        std::vector<int> bin, cls;
        for (auto& x : xs) {
            bin.push_back(static_cast<int>(std::upper_bound(got.begin(), got.end(), x.value) - got.begin()));
            cls.push_back(x.label);
        }
        CHECK(oracle::mantaras_distance(bin, cls) == Catch::Approx(best).margin(1e-12));

        // a single greedy split is the best single split
        if (full.bins() >= 2) {
            const auto two = entropy_distance(xs, 2);
            std::vector<double> c2;
            const double b2 = oracle::best_distance_split(xs, 2, c2);
            std::vector<int> bb;
            for (auto& x : xs)
                bb.push_back(x.value > two.cutpoints[1] ? 1 : 0);
            CHECK(oracle::mantaras_distance(bb, cls) == Catch::Approx(b2).margin(1e-12));
        }
    }
}
