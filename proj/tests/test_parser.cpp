#include <pplp/program.hpp>

#include <catch_amalgamated.hpp>

#include <random>

using namespace pplp;

namespace
{

std::vector<double> coeffs(const Polynomial& p) { return {p.coefficients().begin(), p.coefficients().end()}; }

const char* kMixListing = R"(
(I,Gaussian(90,10)) :: intelligence(I).
0.6 :: heads.
(I,Gaussian(110,10)) :: intelligence_smart(I).
mix(I) :- heads, intelligence(I).
mix(I) :- intelligence_smart(I), \+ heads.
average :- intelligence(I), ininterval(I,65,85).
query(average).
)";

const char* kIntLow = R"(
-0.024719432823743857 + 0.0005171566890546171 I  :: int_low(I).
int_low(I) :- intelligence(I), below(I,70).
int_mid(I) :- intelligence(I), ininterval(I,70,90).
average1 :- intelligence(I),ininterval(I,65,70).
average2 :- intelligence(I),ininterval(I,70,85).
)";

const char* kUniversity = R"(
intelligence1 :- intelligence(I),ininterval(I,51,60).
intelligence2 :- intelligence(I),ininterval(I,60,72).
nrhours2(C) :- nrhours(C,N),ininterval(N,35,50).
satisfaction_mid(C) :- intelligence(I),ininterval(I,50,60),
    \+difficulty_hard(C).
grade_high(C) :- difficulty_easy(C), \+intelligence2,
    \+nrhours2(C), \+intelligence1.
)";

const char* kHappiness = R"(
trust4(A) :- trust(A,I), ininterval(I,0.07857,  0.1044).
happiness1(A) :- economy1(A), trust4(A).
happiness1(A) :- freedom6(A), economy1(A).
happiness6(A) :- health4(A), family2(A).
happiness6(A) :- inregion_central_and_eastern_europe(A),
    trust4(A), health3(A).
evidence(inregion_central_and_eastern_europe(slovakia)).
query(happiness6(slovakia)).
(4.44 -17.42*X + 19.66*X^2) * (-0.12+0.58*Y +0.52*Y^2)::
    social(X,Y).
social1:-social(X,Y),ininterval(X,0.4,0.5),ininterval(Y,0.42,0.7).
happiness6 :- health4, family2, social1.
)";

} // namespace

TEST_CASE("listing statements", "[parser]")
{
    const auto p = parse(kMixListing);
    REQUIRE(p.statements.size() == 7);
    const auto& heads = std::get<ProbFact>(p.statements[1]);
    CHECK(heads.probability == 0.6);
    CHECK(heads.atom == Atom{"heads", {}});
    const auto& mix = std::get<Clause>(p.statements[3]);
    CHECK(mix.body.size() == 2);
    const auto& mix2 = std::get<Clause>(p.statements[4]);
    CHECK(mix2.body[1].negated);
    const auto& avg = std::get<Clause>(p.statements[5]);
    CHECK(avg.body[1].atom.predicate == "ininterval");
    CHECK(avg.body[1].atom.args[1] == Term::number(65));
    const auto& g = std::get<DistributionFact>(p.statements[0]);
    CHECK(g.distribution == Term::compound("Gaussian", {Term::number(90), Term::number(10)}));
    CHECK(std::get<Query>(p.statements[6]).atom.predicate == "average");
}

TEST_CASE("polynomial weights keep every digit", "[parser]")
{
    const auto p = parse(kIntLow);
    const auto& f = std::get<ContinuousFact>(p.statements[0]);
    const auto& w = std::get<Polynomial>(f.weight);
    CHECK(coeffs(w) == std::vector<double>{-0.024719432823743857, 0.0005171566890546171});
    CHECK(w.origin() == 0.0);
    const std::string text = print(p);
    CHECK(text.find("0.0005171566890546171") != std::string::npos);
    CHECK(text.find("-0.024719432823743857") != std::string::npos);
    CHECK(parse(text) == p);
}

TEST_CASE("round trip over listings", "[parser]")
{
    for (const char* src : {kMixListing, kIntLow, kUniversity, kHappiness}) {
        const auto p = parse(src);
        CHECK(parse(print(p)) == p);
        CHECK(print(parse(print(p))) == print(p));
    }
    CHECK(print(parse("")) == "");
    CHECK(print(parse("% only a comment\n")) == "");
}

TEST_CASE("negation prints with the prefix", "[parser]")
{
    const auto p = parse("a :- \\+b, c.");
    CHECK(print(p) == "a :- \\+ b, c.\n");
}

TEST_CASE("multivariate weight", "[parser]")
{
    const auto p = parse(kHappiness);
    const ContinuousFact* social = nullptr;
    for (const auto& s : p.statements)
        if (auto* f = std::get_if<ContinuousFact>(&s))
            social = f;
    REQUIRE(social);
    CHECK(social->variables == std::vector<std::string>{"X", "Y"});
    const auto& m = std::get<MultivariatePolynomial>(social->weight);
    const double x = 0.3, y = 0.8;
    const double expect = (4.44 - 17.42 * x + 19.66 * x * x) * (-0.12 + 0.58 * y + 0.52 * y * y);
    CHECK(m(std::vector<double>{x, y}) == Catch::Approx(expect).epsilon(1e-14));
    CHECK(m.terms().size() == 9);
}

TEST_CASE("anchored pieces survive printing", "[parser][property]")
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> c(1 + rng() % 9);
        for (auto& x : c)
            x = u(rng) * std::pow(10.0, static_cast<int>(rng() % 12) - 6);
        const double origin = trial % 3 == 0 ? 0.0 : u(rng) * 50;
        Program p;
        p.add(ContinuousFact{{"X"}, Polynomial(c, origin), Atom{"att_1", {Term::variable("X")}}});
        p.add(Clause{Atom{"att_1", {Term::variable("X")}},
                     {Literal{Atom{"att", {Term::variable("X")}}},
                      Literal{Atom{"ininterval", {Term::variable("X"), Term::number(u(rng)), Term::number(4)}}}}});
        const auto q = parse(print(p));
        REQUIRE(q == p);
    }
}

TEST_CASE("arithmetic forms", "[parser]")
{
    auto weight = [](const char* src) { return std::get<Polynomial>(std::get<ContinuousFact>(parse(src).statements[0]).weight); };
    CHECK(coeffs(weight("2*X^2 - X/4 + 1 :: a(X).")) == std::vector<double>{1, -0.25, 2});
    CHECK(weight("-(X - 1)^2 :: a(X).")(3.0) == -4.0);
    CHECK(weight("(X + 2) (X - 2) :: a(X).")(5.0) == 21.0);
    CHECK(coeffs(weight("3e-2 X :: a(X).")) == std::vector<double>{0, 0.03});
    const auto pf = std::get<ProbFact>(parse("0.5*0.4 :: a.").statements[0]);
    CHECK(pf.probability == Catch::Approx(0.2));
}

TEST_CASE("evidence forms", "[parser]")
{
    const auto p = parse("evidence(a). evidence(b, false). evidence(\\+ c). evidence(d, true).");
    CHECK(std::get<Evidence>(p.statements[0]).value);
    CHECK_FALSE(std::get<Evidence>(p.statements[1]).value);
    CHECK_FALSE(std::get<Evidence>(p.statements[2]).value);
    CHECK(std::get<Evidence>(p.statements[3]).value);
    CHECK(parse(print(p)) == p);
}

TEST_CASE("syntax errors carry positions", "[parser]")
{
    try {
        parse("a :- b.\nc :- .\n");
        FAIL("no error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(e.column() == 6);
    }
    CHECK_THROWS_AS(parse("a :- b"), ParseError);
    CHECK_THROWS_AS(parse("a # b."), ParseError);
    CHECK_THROWS_AS(parse("2*Y :: a(X)."), ParseError);
    CHECK_THROWS_AS(parse("X^1.5 :: a(X)."), ParseError);
    CHECK_THROWS_AS(parse("1.5 :: a."), SemanticError);
    CHECK_THROWS_AS(parse("-0.1 :: a."), SemanticError);
    CHECK_THROWS_AS(parse("p(X)."), SemanticError);
}

TEST_CASE("substitution", "[parser]")
{
    const Atom pxy{"p", {Term::variable("X"), Term::variable("Y")}};
    CHECK(substitute(pxy, {{"X", Term::symbol("a")}}) == Atom{"p", {Term::symbol("a"), Term::variable("Y")}});
    const Atom px{"p", {Term::variable("X")}};
    const Term fb = Term::compound("f", {Term::symbol("b")});
    CHECK(substitute(px, {{"X", fb}}) == Atom{"p", {fb}});
    const Atom g{"p", {Term::symbol("a"), Term::number(3)}};
    CHECK(substitute(g, {{"X", Term::symbol("z")}}) == g);
    // simultaneous: X/Y, Y/X swaps
    const auto sw = substitute(pxy, {{"X", Term::variable("Y")}, {"Y", Term::variable("X")}});
    CHECK(sw == Atom{"p", {Term::variable("Y"), Term::variable("X")}});
}

TEST_CASE("anonymous variables are distinct", "[parser]")
{
    const auto c = std::get<Clause>(parse("a :- p(_, _).").statements[0]);
    CHECK(c.body[0].atom.args[0] != c.body[0].atom.args[1]);
}
