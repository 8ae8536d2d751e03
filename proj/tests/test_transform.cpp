#include <pplp/engine.hpp>
#include <pplp/transform.hpp>

#include <catch_amalgamated.hpp>

using namespace pplp;

namespace
{

const std::string uniform_split = "1 + 0*X :: att_lo(X).\n"
                                  "att_lo(X) :- att(X), ininterval(X,0,0.5).\n"
                                  "1 + 0*X :: att_hi(X).\n"
                                  "att_hi(X) :- att(X), ininterval(X,0.5,1).\n";

} // namespace

TEST_CASE("uniform density split in two", "[transform]")
{
    const auto hp = load_program(uniform_split);
    const auto dp = discretize_program(hp);
    REQUIRE(dp.mapping.size() == 2);
    CHECK(dp.mapping[0].probability == Catch::Approx(0.5).margin(1e-15));
    CHECK(dp.mapping[1].probability == Catch::Approx(0.5).margin(1e-15));
    const auto facts = dp.program.all<ProbFact>();
    REQUIRE(facts.size() == 2);
    CHECK(to_string(Statement{facts[0]}) == "0.5 :: att_lo(X)");
    // guards stay verbatim
    const auto clauses = dp.program.all<Clause>();
    REQUIRE(clauses.size() == 2);
    CHECK(to_string(Statement{clauses[0]}) == "att_lo(X) :- att(X), ininterval(X,0,0.5)");
    CHECK(dp.program.all<ContinuousFact>().empty());
    // the text reads back
    CHECK(parse(print(dp.program)) == dp.program);
}

TEST_CASE("single piece becomes a certain fact", "[transform]")
{
    const auto dp = discretize_program(load_program("0.1 + 0*X :: att_all(X). att_all(X) :- att(X), ininterval(X,0,10)."));
    REQUIRE(dp.mapping.size() == 1);
    CHECK(dp.mapping[0].probability == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("bounded int_low piece", "[transform]")
{
    const double a = -0.024719432823743857, b = 0.0005171566890546171;
    const double low = a * 20 + b * (70 * 70 - 50 * 50) / 2;
    const std::string src = "-0.024719432823743857 + 0.0005171566890546171 I :: int_low(I).\n"
                            "int_low(I) :- intelligence(I), above(I,50), below(I,70).\n" +
                            format_number((1 - low) / 40) + " + 0*I :: int_high(I).\n"
                            "int_high(I) :- intelligence(I), ininterval(I,70,110).\n";
    const auto dp = discretize_program(load_program(src));
    const auto* m = dp.find("int_low/1");
    REQUIRE(m);
    CHECK(m->probability == Catch::Approx(low).epsilon(1e-13));
    CHECK(dp.attribute_mass("intelligence/1") == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("unbounded piece is a contract error", "[transform]")
{
    CHECK_THROWS_AS(discretize_program(parse("-0.024719432823743857 + 0.0005171566890546171 I :: int_low(I).\n"
                                             "int_low(I) :- intelligence(I), below(I,70).")),
                    ContractError);
}

TEST_CASE("pieces agree with the engine", "[transform]")
{
    const std::string src = "0.4 + 0.1*(X - 1) :: w_1(S,X).\n"
                            "w_1(S,X) :- w(S,X), ininterval(X,0,2).\n"
                            "0.1 - 0.05*(X - 3) :: w_2(S,X).\n"
                            "w_2(S,X) :- w(S,X), ininterval(X,2,4).\n"
                            "0.2 :: other(s1).\n";
    const auto hp = load_program(src, {1e-12});
    const auto dp = discretize_program(hp);
    REQUIRE(dp.mapping.size() == 2);
    CHECK(dp.mapping[0].entity_args == std::vector<std::size_t>{0});
    for (const auto& m : dp.mapping) {
        Atom q{m.name, {Term::symbol("s1"), Term::variable("X")}};
        CHECK(std::abs(probability(hp, q).probability - m.probability) <= 1e-9);
    }
    CHECK(dp.attribute_mass("w/2") == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("evidence intervals refine pieces", "[transform]")
{
    const auto hp = load_program("1 + 0*X :: att_all(X).\n"
                                 "att_all(X) :- att(X), ininterval(X,0,1).\n"
                                 "avg :- att(X), ininterval(X,0.2,0.5).\n"
                                 "evidence(avg).\n");
    const auto dp = discretize_program(hp);
    REQUIRE(dp.mapping.size() == 3);
    CHECK(dp.mapping[0].name == "att_all_1");
    CHECK(dp.mapping[0].parent == "att_all/1");
    CHECK(dp.mapping[0].probability == Catch::Approx(0.2));
    CHECK(dp.mapping[1].probability == Catch::Approx(0.3));
    CHECK(dp.mapping[2].probability == Catch::Approx(0.5));
    CHECK(dp.attribute_mass("att/1") == Catch::Approx(1.0).margin(1e-12));
    const std::string text = print(dp.program);
    CHECK(text.find("att_all(X) :- att_all_2(X).") != std::string::npos);
    CHECK(text.find("att_all(X) :- att(X), ininterval(X,0,1).") == std::string::npos);
    CHECK(text.find("evidence(avg).") != std::string::npos);
}

TEST_CASE("entity piece facts", "[transform]")
{
    const auto dp = discretize_program(load_program("0.5 + 0*X :: h_1(C,X). h_1(C,X) :- h(C,X), ininterval(X,0,1).\n"
                                                    "0.5 + 0*X :: h_2(C,X). h_2(C,X) :- h(C,X), ininterval(X,1,2)."));
    const std::vector<Term> c1{Term::symbol("c1")};
    auto s = entity_piece_facts(dp, "h/2", c1, 1.0);
    REQUIRE(s.size() == 1);
    CHECK(to_string(s[0]) == "h_2(c1)");
    s = entity_piece_facts(dp, "h/2", c1, 2.0);
    REQUIRE(s.size() == 1);
    CHECK(to_string(s[0]) == "h_2(c1)");
    CHECK(entity_piece_facts(dp, "h/2", c1, 5.0).empty());
    s = entity_piece_facts(dp, "h/2", c1, std::nullopt);
    REQUIRE(s.size() == 2);
    CHECK(to_string(s[0]) == "0.5 :: h_1(c1)");
}

namespace
{

DiscretizedProgram university_background()
{
    return discretize_program(load_program("difficulty_easy(c1). difficulty_easy(c2). difficulty_hard(c3).\n"
                                           "takes(s1,c1). takes(s2,c2). takes(s2,c3).\n"
                                           "0.7 :: nrhours2(c2).\n"));
}

} // namespace

TEST_CASE("learning task types and closed world", "[transform]")
{
    const auto dp = university_background();
    const std::vector<Atom> ex{Atom{"grade_high", {Term::symbol("c1")}}, Atom{"grade_high", {Term::symbol("c2")}}};
    const auto task = emit_learning_task(dp, "grade_high", 1, ex);
    CHECK(task.positives.size() == 2);
    REQUIRE(task.negatives.size() == 1);
    CHECK(to_string(task.negatives[0]) == "grade_high(c3)");
    REQUIRE(task.bias.size() == 4);
    CHECK(task.bias[0].predicate == "difficulty_easy");
    // course positions share one type, students another
    const auto course = task.target.types[0];
    CHECK(task.bias[0].types[0] == course);
    CHECK(task.bias[2].predicate == "takes");
    CHECK(task.bias[2].types[1] == course);
    CHECK(task.bias[2].types[0] != course);
    CHECK(task.background.size() == 7);
    CHECK(task.background.back().probability == 0.7);

    CHECK_THROWS_AS(emit_learning_task(dp, "grade_high", 1, {}), ContractError);
    CHECK_THROWS_AS(emit_learning_task(dp, "takes", 2, {Atom{"takes", {Term::symbol("s9"), Term::symbol("c9")}}}),
                    ContractError);
}

TEST_CASE("propositional target", "[transform]")
{
    const auto dp = discretize_program(load_program("a. 0.3 :: b."));
    const auto task = emit_learning_task(dp, "t", 0, {Atom{"t", {}}});
    CHECK(task.positives.size() == 1);
    CHECK(task.negatives.empty());
    CHECK(task.target.types.empty());
}

TEST_CASE("task files round trip", "[transform]")
{
    const auto dp = university_background();
    const std::vector<Atom> ex{Atom{"grade_high", {Term::symbol("c1")}}};
    const auto task = emit_learning_task(dp, "grade_high", 1, ex);
    const auto files = write_task(task);
    CHECK(files.examples == "evidence(grade_high(c1)).\nevidence(grade_high(c2), false).\nevidence(grade_high(c3), false).\n");
    CHECK(files.bias.find("target(grade_high(t1)).") != std::string::npos);
    const auto back = read_task(files);
    CHECK(back.target.predicate == "grade_high");
    CHECK(back.target.types == task.target.types);
    CHECK(back.positives == task.positives);
    CHECK(back.negatives == task.negatives);
    REQUIRE(back.bias.size() == task.bias.size());
    for (std::size_t i = 0; i < back.bias.size(); ++i)
        CHECK(back.bias[i].key() == task.bias[i].key());
    REQUIRE(back.background.size() == task.background.size());
    CHECK(write_task(back).background == files.background);
}
