#include <catch2/catch_amalgamated.hpp>

#include "fkj/driver.hpp"
#include "fkj/interp.hpp"
#include "helpers.hpp"

using namespace fkj;

namespace {

struct ItLog {
  int beta;
  Specification::Kind spec;
  Verdict::Status result;
};

void expect_iterations(const Outcome& o, const std::vector<ItLog>& want) {
  REQUIRE(o.iterations.size() == want.size());
  for (size_t i = 0; i < want.size(); ++i) {
    INFO("iteration " << i);
    CHECK(o.iterations[i].beta == want[i].beta);
    CHECK(o.iterations[i].spec == want[i].spec);
    CHECK(o.iterations[i].result == want[i].result);
    CHECK(o.iterations[i].states > 0);
  }
}

constexpr auto kSafety = Specification::Kind::Safety;
constexpr auto kBound = Specification::Kind::Bound;
constexpr auto kUnion = Specification::Kind::Union;
constexpr auto kSat = Verdict::Status::Satisfied;
constexpr auto kViol = Verdict::Status::Violated;

}  // namespace

TEST_CASE("iteration schedules on the bounded example") {
  Program p = fkjtest::load_corpus("fig1_bounded.fkj");

  SECTION("safety-first schedule") {
    Outcome o = algorithm1(p);
    CHECK(o.result == Outcome::Result::Correct);
    CHECK(o.beta == 2);
    expect_iterations(o, {{1, kSafety, kSat},
                          {1, kBound, kViol},
                          {2, kSafety, kSat},
                          {2, kBound, kSat}});
  }

  SECTION("width-first schedule") {
    Outcome o = algorithm2(p);
    CHECK(o.result == Outcome::Result::Correct);
    CHECK(o.beta == 2);
    expect_iterations(o, {{1, kBound, kViol},
                          {2, kBound, kSat},
                          {2, kSafety, kSat}});
  }

  SECTION("single united search per limit") {
    Outcome o = algorithm3(p);
    CHECK(o.result == Outcome::Result::Correct);
    CHECK(o.beta == 2);
    expect_iterations(o, {{1, kUnion, kViol}, {2, kUnion, kSat}});
  }
}

TEST_CASE("iteration schedules on the buggy variant") {
  Program p = fkjtest::load_corpus("fig1_buggy.fkj");

  SECTION("safety-first finds the bug after raising the limit") {
    Outcome o = algorithm1(p);
    CHECK(o.result == Outcome::Result::Incorrect);
    CHECK(o.beta == 2);
    expect_iterations(
        o, {{1, kSafety, kSat}, {1, kBound, kViol}, {2, kSafety, kViol}});
    CHECK_FALSE(o.trace.empty());
    REQUIRE(o.cex.has_value());
    REQUIRE(o.net != nullptr);
  }

  SECTION("width-first settles the width, then fails safety") {
    Outcome o = algorithm2(p);
    CHECK(o.result == Outcome::Result::Incorrect);
    CHECK(o.beta == 2);
    expect_iterations(
        o, {{1, kBound, kViol}, {2, kBound, kSat}, {2, kSafety, kViol}});
  }

  SECTION("united search classifies the second violation as a failure") {
    Outcome o = algorithm3(p);
    CHECK(o.result == Outcome::Result::Incorrect);
    CHECK(o.beta == 2);
    expect_iterations(o, {{1, kUnion, kViol}, {2, kUnion, kViol}});
    REQUIRE(o.cex.has_value());
    bool failure_place = false;
    for (LocId b : o.cex->violated)
      if (loc_of(b).kind == ControlLocation::Kind::Prog &&
          loc_of(b).rem.is_failed())
        failure_place = true;
    CHECK(failure_place);
  }
}

TEST_CASE("wider programs raise the limit further") {
  Program p = fkjtest::load_corpus("width3.fkj");

  Outcome o1 = algorithm1(p);
  CHECK(o1.result == Outcome::Result::Correct);
  CHECK(o1.beta == 3);
  expect_iterations(o1, {{1, kSafety, kSat},
                         {1, kBound, kViol},
                         {2, kSafety, kSat},
                         {2, kBound, kViol},
                         {3, kSafety, kSat},
                         {3, kBound, kSat}});

  Outcome o2 = algorithm2(p);
  CHECK(o2.result == Outcome::Result::Correct);
  CHECK(o2.beta == 3);
  expect_iterations(o2, {{1, kBound, kViol},
                         {2, kBound, kViol},
                         {3, kBound, kSat},
                         {3, kSafety, kSat}});

  Outcome o3 = algorithm3(p);
  CHECK(o3.result == Outcome::Result::Correct);
  CHECK(o3.beta == 3);
  expect_iterations(
      o3, {{1, kUnion, kViol}, {2, kUnion, kViol}, {3, kUnion, kSat}});
}

TEST_CASE("settled width matches the interpreter") {
  // The first limit whose bound check passes is the program's thread width.
  for (const char* name :
       {"fig1_bounded.fkj", "fig8_freshid.fkj", "width3.fkj"}) {
    INFO(name);
    Program p = fkjtest::load_corpus(name);
    Outcome o = algorithm2(p);
    REQUIRE(o.result == Outcome::Result::Correct);
    CHECK(o.beta == explore(p).max_width);

    int bound_failures = 0;
    for (const IterationLog& it : o.iterations)
      if (it.spec == kBound && it.result == kViol) ++bound_failures;
    CHECK(bound_failures < explore(p).max_width);
  }
}

TEST_CASE("the three schedules agree on conclusive outcomes") {
  for (const char* name : {"fig1_bounded.fkj", "fig1_buggy.fkj",
                           "fig8_freshid.fkj", "width3.fkj"}) {
    INFO(name);
    Program p = fkjtest::load_corpus(name);
    Outcome a = verify(p, 1), b = verify(p, 2), c = verify(p, 3);
    CHECK(a.result == b.result);
    CHECK(b.result == c.result);
    CHECK(a.beta == b.beta);
    CHECK(b.beta == c.beta);
  }
}

TEST_CASE("unbounded width handling") {
  SECTION("a bug inside an unbounded fork loop is still found") {
    Program p = fkjtest::load_corpus("infinite_width_buggy.fkj");
    Outcome o = algorithm1(p);
    CHECK(o.result == Outcome::Result::Incorrect);
    CHECK(o.beta == 1);
    REQUIRE(o.iterations.size() == 1);
    CHECK(o.iterations[0].spec == kSafety);
    CHECK(o.iterations[0].result == kViol);
  }

  SECTION("a safe unbounded program exhausts the limit budget") {
    Program p = fkjtest::load_corpus("infinite_width_safe.fkj");
    Outcome o = algorithm2(p, {.beta_init = 1, .beta_max = 4});
    CHECK(o.result == Outcome::Result::BetaLimitExceeded);
    CHECK(o.beta == 4);
    REQUIRE(o.iterations.size() == 4);
    for (int i = 0; i < 4; ++i) {
      CHECK(o.iterations[i].beta == i + 1);
      CHECK(o.iterations[i].spec == kBound);
      CHECK(o.iterations[i].result == kViol);
    }

    Outcome o1 = algorithm1(p);
    CHECK(o1.result == Outcome::Result::BetaLimitExceeded);
    CHECK(o1.beta == 8);
  }
}

TEST_CASE("resource limits surface as their own outcome") {
  Program p = fkjtest::load_corpus("fig1_bounded.fkj");
  Outcome o = algorithm1(p, {.limits = {.max_states = 5}});
  CHECK(o.result == Outcome::Result::ResourceLimit);
  CHECK_FALSE(o.details.empty());
  REQUIRE(o.iterations.size() == 1);
  CHECK(o.iterations[0].result == Verdict::Status::Unknown);
}

TEST_CASE("the dispatcher validates its argument") {
  Program p = fkjtest::load_corpus("fig1_bounded.fkj");
  CHECK(verify(p, 3).algorithm == 3);
  CHECK_THROWS_AS(verify(p, 0), std::invalid_argument);
  CHECK_THROWS_AS(verify(p, 4), std::invalid_argument);
}

TEST_CASE("machine-readable reports") {
  Program p = fkjtest::load_corpus("fig1_bounded.fkj");

  SECTION("a correct run") {
    Outcome o = algorithm1(p);
    nlohmann::json j = nlohmann::json::parse(report(o, "json"));
    CHECK(j["verdict"] == "correct");
    CHECK(j["beta"] == 2);
    CHECK(j["algorithm"] == 1);
    REQUIRE(j["iterations"].is_array());
    REQUIRE(j["iterations"].size() == 4);
    for (const auto& it : j["iterations"]) {
      CHECK(it.contains("beta"));
      CHECK((it["spec"] == "safety" || it["spec"] == "bound"));
      CHECK((it["result"] == "satisfied" || it["result"] == "violated"));
      CHECK(it["states"].is_number());
      CHECK(it["millis"].is_number());
    }
    CHECK_FALSE(j.contains("counterexample"));
    CHECK_FALSE(j.contains("details"));
  }

  SECTION("an incorrect run carries the trace") {
    Program bad = fkjtest::load_corpus("fig1_buggy.fkj");
    Outcome o = algorithm1(bad);
    nlohmann::json j = nlohmann::json::parse(report(o, "json"));
    CHECK(j["verdict"] == "incorrect");
    REQUIRE(j["counterexample"].is_array());
    REQUIRE_FALSE(j["counterexample"].empty());
    for (const auto& step : j["counterexample"]) {
      CHECK(step["template"].is_string());
      CHECK((step["instance"] == "main" || step["instance"].is_number()));
      CHECK(step["statement"].is_string());
      CHECK(step["line"].is_number());
      REQUIRE(step["globals"].is_object());
      CHECK(step["globals"].contains("c"));
      CHECK(step["globals"].contains("i"));
    }
    // The failing step runs inside a worker instance.
    const auto& last = j["counterexample"].back();
    CHECK(last["template"] == "w");
    CHECK(last["instance"].is_number());
  }

  SECTION("an exhausted limit budget") {
    Program inf = fkjtest::load_corpus("infinite_width_safe.fkj");
    Outcome o = algorithm2(inf, {.beta_init = 1, .beta_max = 4});
    nlohmann::json j = nlohmann::json::parse(report(o, "json"));
    CHECK(j["verdict"] == "beta-limit-exceeded");
    CHECK(j["beta"] == 4);
  }

  SECTION("a resource limit names what ran out") {
    Outcome o = algorithm1(p, {.limits = {.max_states = 5}});
    nlohmann::json j = nlohmann::json::parse(report(o, "json"));
    CHECK(j["verdict"] == "resource-limit");
    CHECK(j["details"].is_string());
  }

  SECTION("text format") {
    Outcome o = algorithm1(p);
    std::string text = report(o, "text");
    CHECK(text.find("verdict: correct (beta=2, algorithm 1)") !=
          std::string::npos);
    CHECK(text.find("beta=1 bound: violated") != std::string::npos);

    Outcome bad = algorithm1(fkjtest::load_corpus("fig1_buggy.fkj"));
    std::string btext = report(bad, "text");
    CHECK(btext.find("verdict: incorrect") != std::string::npos);
    CHECK(btext.find("counterexample:") != std::string::npos);
  }
}
