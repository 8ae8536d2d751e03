#include <pplp/engine.hpp>

#include <support/oracles.hpp>

#include <catch_amalgamated.hpp>

using namespace pplp;

namespace
{

Atom atom(const std::string& text)
{
    return std::get<Query>(parse("query(" + text + ").").statements[0]).atom;
}

double prob(const HybridProgram& hp, const std::string& q) { return probability(hp, atom(q)).probability; }

// int_low on [50,70] plus a flat remainder on [70,110]; total mass 1
std::string intelligence_density()
{
    const double a = -0.024719432823743857, b = 0.0005171566890546171;
    const double low = a * 20 + b * (70 * 70 - 50 * 50) / 2;
    const double rest = (1 - low) / 40;
    return "-0.024719432823743857 + 0.0005171566890546171 I :: int_low(I).\n"
           "int_low(I) :- intelligence(I), above(I,50), below(I,70).\n" +
           format_number(rest) + " + 0*I :: int_rest(I).\n"
           "int_rest(I) :- intelligence(I), ininterval(I,70,110).\n";
}

} // namespace

TEST_CASE("discrete fact", "[engine]")
{
    const auto hp = load_program("0.6::heads. q :- heads. query(q).");
    const auto gp = ground(hp);
    CHECK(gp.choices.size() == 1);
    CHECK(gp.clauses.size() == 1);
    const auto res = run_queries(hp);
    REQUIRE(res.size() == 1);
    CHECK(res[0].probability == Catch::Approx(0.6).margin(1e-15));
}

TEST_CASE("no queries gives an empty grounding", "[engine]")
{
    const auto hp = load_program("0.6::heads. q :- heads.");
    const auto gp = ground(hp);
    CHECK(gp.atoms.empty());
    CHECK(gp.clauses.empty());
    CHECK(run_queries(hp).empty());
}

TEST_CASE("uniform interval mass", "[engine]")
{
    const auto hp = load_program("1 + 0*X :: att_all(X).\n"
                                 "att_all(X) :- att(X), ininterval(X,0,1).\n"
                                 "avg :- att(X), ininterval(X,0.2,0.5).\n");
    CHECK(prob(hp, "avg") == Catch::Approx(0.3).margin(1e-15));
    CHECK(prob(hp, "att_all(X)") == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("partition of a uniform density", "[engine]")
{
    const auto hp = load_program("1 + 0*X :: att_all(X).\n"
                                 "att_all(X) :- att(X), ininterval(X,0,1).\n"
                                 "lo :- att(X), below(X,0.5).\n"
                                 "query(lo).\n");
    const auto gp = ground(hp);
    const auto part = partition_domains(gp);
    REQUIRE(part.vars.size() == 1);
    const auto& v = part.vars[0];
    REQUIRE(v.cells.size() == 2);
    CHECK(v.cells[0].bounds[0].lo == 0.0);
    CHECK(v.cells[0].bounds[0].hi == 0.5);
    CHECK(v.cells[1].bounds[0].hi == 1.0);
    CHECK(v.masses[0] == Catch::Approx(0.5));
    CHECK(v.masses[1] == Catch::Approx(0.5));
}

TEST_CASE("query split at a density breakpoint", "[engine]")
{
    const auto hp = load_program(intelligence_density() +
                                 "average :- intelligence(I), ininterval(I,65,85).\n"
                                 "average1 :- intelligence(I), ininterval(I,65,70).\n"
                                 "average2 :- intelligence(I), ininterval(I,70,85).\n"
                                 "query(average).\n");
    const auto gp = ground(hp);
    const auto part = partition_domains(gp);
    bool has_65_70 = false, has_70_85 = false;
    for (const auto& c : part.vars[0].cells) {
        has_65_70 = has_65_70 || (c.bounds[0].lo == 65 && c.bounds[0].hi == 70);
        has_70_85 = has_70_85 || (c.bounds[0].lo == 70 && c.bounds[0].hi == 85);
    }
    CHECK(has_65_70);
    CHECK(has_70_85);
    const double avg = prob(hp, "average"), a1 = prob(hp, "average1"), a2 = prob(hp, "average2");
    CHECK(std::abs(avg - (a1 + a2)) <= 1e-12);
    CHECK(a1 == Catch::Approx(0.050943218437213986).epsilon(1e-12));
    CHECK(prob(hp, "int_low(I)") + prob(hp, "int_rest(I)") == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mixture through a coin", "[engine]")
{
    // two triangular densities on [60,120]
    const std::string src = "0.6 :: heads.\n"
                            "0.000555555555555556*(I - 60) :: int_up(I).\n"
                            "int_up(I) :- intelligence(I), ininterval(I,60,120).\n"
                            "0.0333333333333333 - 0.000555555555555556*(I - 60) :: smart_down(I).\n"
                            "smart_down(I) :- intelligence_smart(I), ininterval(I,60,120).\n"
                            "mix(I) :- heads, intelligence(I).\n"
                            "mix(I) :- intelligence_smart(I), \\+ heads.\n"
                            "q :- mix(I), ininterval(I,80,95).\n";
    const auto hp = load_program(src, {1e-6});
    const auto& up = hp.attributes.at("intelligence/1").univariate;
    const auto& down = hp.attributes.at("intelligence_smart/1").univariate;
    const double expect = 0.6 * integrate_piecewise(up, 80, 95) + 0.4 * integrate_piecewise(down, 80, 95);
    CHECK(prob(hp, "q") == Catch::Approx(expect).epsilon(1e-12));
}

TEST_CASE("complement of an interval", "[engine]")
{
    const auto hp = load_program(intelligence_density() +
                                 "q :- intelligence(I), ininterval(I,66.5,91.25).\n"
                                 "nq :- intelligence(I), below(I,66.5).\n"
                                 "nq :- intelligence(I), above(I,91.25).\n");
    CHECK(prob(hp, "q") + prob(hp, "nq") == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("refining a cell leaves probabilities alone", "[engine]")
{
    const std::string base = intelligence_density() + "0.3 :: lucky.\n"
                             "q :- intelligence(I), ininterval(I,60,90), lucky.\n"
                             "q :- intelligence(I), above(I,100).\n";
    const auto a = load_program(base);
    const auto b = load_program(base + "r :- intelligence(I), below(I,75.5).\nq2 :- q, \\+ r.\nq2 :- q, r.\n");
    CHECK(std::abs(prob(a, "q") - prob(b, "q")) <= 1e-12);
    CHECK(std::abs(prob(b, "q2") - prob(b, "q")) <= 1e-12);
}

TEST_CASE("evidence", "[engine]")
{
    const auto hp = load_program("0.3 :: a. 0.5 :: b. sunny. q :- a. q :- b. r :- b.");
    std::vector<Evidence> same{{atom("q"), true}};
    CHECK(probability(hp, atom("q"), same).probability == Catch::Approx(1.0));
    std::vector<Evidence> indep{{atom("a"), true}};
    CHECK(probability(hp, atom("r"), indep).probability == Catch::Approx(0.5));
    std::vector<Evidence> det{{atom("sunny"), true}};
    CHECK(probability(hp, atom("q"), det).probability == Catch::Approx(1 - 0.7 * 0.5));
    // P(a | q) = 0.3 / 0.65
    CHECK(probability(hp, atom("a"), same).probability == Catch::Approx(0.3 / 0.65));
    std::vector<Evidence> neg{{atom("q"), false}};
    CHECK(probability(hp, atom("a"), neg).probability == Catch::Approx(0.0));
    std::vector<Evidence> impossible{{atom("nothing"), true}};
    CHECK_THROWS_AS(probability(hp, atom("q"), impossible), InconsistentEvidence);
    std::vector<Evidence> contradiction{{atom("sunny"), false}};
    CHECK_THROWS_AS(probability(hp, atom("q"), contradiction), InconsistentEvidence);
}

TEST_CASE("entities and program evidence", "[engine]")
{
    const std::string src = "20 + 0*T :: trust_all(A,T).\n"
                            "trust_all(A,T) :- trust(A,T), ininterval(T,0,0.05).\n"
                            "trust4(A) :- trust(A,I), ininterval(I,0.01,0.04).\n"
                            "0.5 :: health4(slovakia). 0.5 :: health4(peru).\n"
                            "0.2 :: family2(slovakia).\n"
                            "0.7 :: inregion(slovakia).\n"
                            "happiness6(A) :- health4(A), family2(A).\n"
                            "happiness6(A) :- inregion(A), trust4(A).\n"
                            "evidence(inregion(slovakia)).\n"
                            "query(happiness6(slovakia)).\n";
    const auto hp = load_program(src);
    const auto gp = ground(hp);
    CHECK(gp.variables.size() == 1);
    const auto res = run_queries(hp);
    REQUIRE(res.size() == 1);
    CHECK(res[0].conditioned);
    // given the region: 1 - (1 - 0.1)(1 - 0.6)
    CHECK(res[0].probability == Catch::Approx(1 - 0.9 * 0.4).epsilon(1e-12));
}

TEST_CASE("non-ground queries expand", "[engine]")
{
    const auto hp = load_program("0.2 :: p(a). 0.4 :: p(b). q(X) :- p(X). query(q(X)).");
    const auto res = run_queries(hp);
    REQUIRE(res.size() == 2);
    CHECK(to_string(res[0].query) == "q(a)");
    CHECK(res[0].probability == Catch::Approx(0.2));
    CHECK(res[1].probability == Catch::Approx(0.4));
}

TEST_CASE("stratified negation", "[engine]")
{
    const auto hp = load_program("0.4 :: a. 0.5 :: b. c :- a. c :- b. d :- \\+ c. e :- d, \\+ a.");
    CHECK(prob(hp, "d") == Catch::Approx(0.6 * 0.5));
    CHECK(prob(hp, "e") == Catch::Approx(0.6 * 0.5));
    CHECK_THROWS_AS(load_program("0.5 :: a. p :- \\+ q, a. q :- \\+ p."), SemanticError);
}

TEST_CASE("multivariate density", "[engine]")
{
    // product density on [0,1] x [0.2,1], normalized there
    auto fx = [](double x) { return 4.44 - 17.42 * x + 19.66 * x * x; };
    auto fy = [](double y) { return -0.12 + 0.58 * y + 0.52 * y * y; };
    const double z = oracle::adaptive(fx, 0, 1) * oracle::adaptive(fy, 0.2, 1);
    const std::string src = format_number(1 / z) +
                            " * (4.44 -17.42*X + 19.66*X^2) * (-0.12+0.58*Y +0.52*Y^2) :: s1(X,Y).\n"
                            "s1(X,Y) :- social(X,Y), ininterval(X,0,1), ininterval(Y,0.2,1).\n"
                            "social1 :- social(X,Y), ininterval(X,0.4,0.5), ininterval(Y,0.42,0.7).\n";
    const auto hp = load_program(src);
    const double expect = oracle::adaptive2d([&](double x, double y) { return fx(x) * fy(y) / z; }, 0.4, 0.5, 0.42, 0.7);
    CHECK(prob(hp, "social1") == Catch::Approx(expect).epsilon(1e-9));
    CHECK(prob(hp, "s1(X,Y)") == Catch::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("choice cap refusal", "[engine]")
{
    std::string src;
    for (int i = 0; i < 26; ++i)
        src += "0.5 :: f" + std::to_string(i) + ".\nq :- f" + std::to_string(i) + ".\n";
    const auto hp = load_program(src);
    try {
        probability(hp, atom("q"));
        FAIL("expected refusal");
    } catch (const InferenceRefusal& e) {
        CHECK(e.estimate() == std::ldexp(1.0, 26));
    }
    EngineOptions small;
    small.choice_cap = 4;
    const auto hp2 = load_program("0.5 :: a. 0.5 :: b. 0.5 :: c. q :- a, b, c.");
    CHECK_THROWS_AS(probability(hp2, atom("q"), {}, small), InferenceRefusal);
}

TEST_CASE("grounding that does not terminate", "[engine]")
{
    const auto hp = load_program("nat(z). nat(s(X)) :- nat(X). query(nat(z)).");
    CHECK_THROWS_AS(ground(hp), GroundingError);
}

TEST_CASE("load checks", "[engine]")
{
    try {
        load_program("0.5 + 0*X :: a_1(X). a_1(X) :- a(X), ininterval(X,0,1).");
        FAIL("expected rejection");
    } catch (const SemanticError& e) {
        CHECK(std::string(e.what()).find("integrates to 0.5") != std::string::npos);
    }
    CHECK_THROWS_AS(load_program("1 - 2*X :: a_1(X). a_1(X) :- a(X), ininterval(X,0,1)."), SemanticError);
    CHECK_THROWS_AS(load_program("1 + 0*X :: a_1(X). a_1(X) :- a(X), below(X,1)."), SemanticError);
    CHECK_THROWS_AS(load_program("1 + 0*X :: a_1(X). a_1(X) :- a(X), ininterval(X,0,1).\n"
                                 "1 + 0*X :: a_2(X). a_2(X) :- a(X), ininterval(X,0.5,1.5)."),
                    SemanticError);
    CHECK_THROWS_AS(load_program("1 + 0*X :: a_1(X)."), SemanticError);
    CHECK_THROWS_AS(load_program("(I,Gaussian(90,10)) :: intelligence(I)."), SemanticError);
    CHECK_THROWS_AS(load_program("query(undefined)."), SemanticError);
    // a lone int_low piece is not a density on its own
    CHECK_THROWS_AS(load_program("-0.024719432823743857 + 0.0005171566890546171 I :: int_low(I).\n"
                                 "int_low(I) :- intelligence(I), below(I,70)."),
                    SemanticError);
}

TEST_CASE("gaps between pieces are zero", "[engine]")
{
    const auto hp = load_program("0.5 + 0*X :: a_1(X). a_1(X) :- a(X), ininterval(X,0,1).\n"
                                 "0.5 + 0*X :: a_2(X). a_2(X) :- a(X), ininterval(X,2,3).\n"
                                 "mid :- a(X), ininterval(X,0.5,2.5).\n");
    CHECK(hp.attributes.at("a/1").univariate.cutpoints().size() == 4);
    CHECK(prob(hp, "mid") == Catch::Approx(0.5));
}
