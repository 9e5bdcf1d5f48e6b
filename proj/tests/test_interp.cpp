#include <random>
#include <set>

#include <catch2/catch_amalgamated.hpp>

#include "fkj/interp.hpp"
#include "helpers.hpp"

using namespace fkj;

namespace {

// Follows the first successor until pred holds or the step budget runs out;
// returns the whole trace.
template <typename Pred>
std::vector<GlobalConfig> drive(const Program& p, Pred pred, int budget) {
  std::vector<GlobalConfig> trace{initial_config(p)};
  while (!pred(trace.back()) && budget-- > 0) {
    auto succs = successors(p, trace.back());
    REQUIRE_FALSE(succs.empty());
    trace.push_back(succs.front().second);
  }
  REQUIRE(pred(trace.back()));
  return trace;
}

}  // namespace

TEST_CASE("initial configuration") {
  SECTION("one start thread holding the whole entry body") {
    Program p = fkjtest::load_corpus("fig1_bounded.fkj");
    GlobalConfig c = initial_config(p);
    REQUIRE(c.threads.size() == 1);
    CHECK(c.threads[0].tmpl == "main");
    CHECK_FALSE(c.threads[0].tid.has_value());
    CHECK(c.threads[0].rem == Remainder::of(p.body("main")));
  }

  SECTION("empty entry template desugars to a single assume") {
    Program p = fkjtest::parse_ok("main { }");
    GlobalConfig c = initial_config(p);
    REQUIRE(c.threads.size() == 1);
    Cmd body = c.threads[0].rem.cmd;
    CHECK(body->kind == CmdKind::Assume);
  }

  SECTION("globals start at zero") {
    Program p = fkjtest::load_corpus("fig1_bounded.fkj");
    GlobalConfig c = initial_config(p);
    REQUIRE(c.globals.size() == 2);
    CHECK(c.globals[0] == std::make_pair(std::string("c"), Value::of_int(0)));
    CHECK(c.globals[1] == std::make_pair(std::string("i"), Value::of_int(0)));
  }
}

TEST_CASE("single steps") {
  SECTION("a failed assumption stops the thread") {
    Program p = fkjtest::parse_ok("main { assume 1 < 0; x := 1; }");
    CHECK(successors(p, initial_config(p)).empty());
  }

  SECTION("fork adds a fresh thread carrying the evaluated id") {
    Program p = fkjtest::parse_ok(
        "globals c, i;\n"
        "main { c := 0; i := 0; fork i w(); }\n"
        "thread w { c := c + i; }\n");
    GlobalConfig cfg = initial_config(p);
    for (int step = 0; step < 2; ++step) {
      auto succs = successors(p, cfg);
      REQUIRE(succs.size() == 1);
      cfg = succs.front().second;
    }
    auto succs = successors(p, cfg);
    REQUIRE(succs.size() == 1);
    CHECK(succs[0].first.stmt.kind == Statement::Kind::Fork);
    const GlobalConfig& next = succs[0].second;
    REQUIRE(next.threads.size() == 2);
    bool found = false;
    for (const auto& th : next.threads) {
      if (th.tmpl != "w") continue;
      found = true;
      CHECK(th.tid == Int(0));
      CHECK(th.rem == Remainder::of(p.body("w")));
    }
    CHECK(found);
  }

  SECTION("join picks any terminated thread with the right id") {
    Program p = fkjtest::parse_ok(
        "main { fork 5 w(); fork 5 w(); join 5; }\n"
        "thread w { x := 1; }\n");
    GlobalConfig cfg;
    LocalConfig joiner;
    joiner.rem = Remainder::of(make_join(sint(5)));
    joiner.tmpl = "main";
    LocalConfig done1{Remainder::done(), "w", Int(5),
                      {{"x", Value::of_int(1)}}};
    LocalConfig done2{Remainder::done(), "w", Int(5),
                      {{"x", Value::of_int(2)}}};
    cfg.threads = {joiner, done1, done2};
    cfg.canonicalize();

    auto succs = successors(p, cfg);
    REQUIRE(succs.size() == 2);
    std::set<int> partners;
    for (const auto& [step, next] : succs) {
      CHECK(step.stmt.kind == Statement::Kind::Join);
      REQUIRE(step.partner.has_value());
      partners.insert(*step.partner);
      CHECK(next.threads.size() == 2);
    }
    CHECK(partners.size() == 2);
    // The two results differ: each drops a different terminated thread.
    CHECK_FALSE(succs[0].second == succs[1].second);
  }

  SECTION("join with no matching thread blocks") {
    Program p = fkjtest::parse_ok("main { join 7; }");
    CHECK(successors(p, initial_config(p)).empty());
  }

  SECTION("assertions succeed or fail, never both") {
    Program ok = fkjtest::parse_ok("globals c; main { assert c == 0; }");
    auto s1 = successors(ok, initial_config(ok));
    REQUIRE(s1.size() == 1);
    CHECK(s1[0].second.threads[0].rem.is_done());

    Program bad = fkjtest::parse_ok("globals c; main { assert c == 1; }");
    auto s2 = successors(bad, initial_config(bad));
    REQUIRE(s2.size() == 1);
    CHECK(s2[0].second.threads[0].rem.is_failed());
    CHECK(s2[0].second.erroneous());
  }

  SECTION("branching follows the guard") {
    Program p = fkjtest::parse_ok(
        "globals g; main { if (g == 0) { g := 1; } else { g := 2; } }");
    auto succs = successors(p, initial_config(p));
    REQUIRE(succs.size() == 1);
    auto [head, rest] = front(succs[0].second.threads[0].rem);
    CHECK(head->kind == CmdKind::Assign);
    CHECK(eval(head->expr, [](const std::string&) { return Value::of_int(0); })
              .as_int() == 1);
  }

  SECTION("successors is reproducible") {
    Program p = fkjtest::load_corpus("fig1_bounded.fkj");
    Exploration ex = explore(p, {.max_configs = 50});
    for (const auto& cfg : ex.reachable) {
      auto a = successors(p, cfg);
      auto b = successors(p, cfg);
      REQUIRE(a.size() == b.size());
      for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].second == b[i].second);
        CHECK(a[i].first.actor == b[i].first.actor);
      }
    }
  }
}

TEST_CASE("state space exploration") {
  SECTION("bounded fork/join example") {
    Program p = fkjtest::load_corpus("fig1_bounded.fkj");
    Exploration ex = explore(p);
    CHECK(ex.exhausted);
    CHECK_FALSE(ex.erroneous);
    CHECK(ex.max_width == 2);
    CHECK(ex.reachable.size() == 638);
  }

  SECTION("buggy variant reaches a failure") {
    Program p = fkjtest::load_corpus("fig1_buggy.fkj");
    Exploration ex = explore(p);
    CHECK(ex.exhausted);
    CHECK(ex.erroneous);
    CHECK(ex.max_width == 2);
    CHECK(ex.reachable.size() == 800);
  }

  SECTION("remaining corpus widths") {
    Exploration f8 = explore(fkjtest::load_corpus("fig8_freshid.fkj"));
    CHECK(f8.exhausted);
    CHECK_FALSE(f8.erroneous);
    CHECK(f8.max_width == 2);
    CHECK(f8.reachable.size() == 342);

    Exploration w3 = explore(fkjtest::load_corpus("width3.fkj"));
    CHECK(w3.exhausted);
    CHECK_FALSE(w3.erroneous);
    CHECK(w3.max_width == 3);
    CHECK(w3.reachable.size() == 24);
  }

  SECTION("an immediate failure") {
    Program p = fkjtest::parse_ok("main { assert 1 == 0; }");
    Exploration ex = explore(p);
    CHECK(ex.erroneous);
    CHECK(ex.max_width == 1);
  }

  SECTION("an unbounded fork loop exhausts the budget") {
    Program p = fkjtest::parse_ok(
        "main { while (0 < 1) { fork 0 w(); } }\n"
        "thread w { }\n");
    Exploration ex = explore(p, {.max_configs = 1000});
    CHECK_FALSE(ex.exhausted);
    CHECK(ex.max_width > 1);
  }

  SECTION("depth limit cuts the frontier") {
    Program p = fkjtest::load_corpus("fig1_bounded.fkj");
    Exploration ex = explore(p, {.max_configs = 1'000'000, .max_depth = 3});
    CHECK_FALSE(ex.exhausted);
    CHECK(ex.reachable.size() < 638);
  }
}

TEST_CASE("execution width") {
  Program p = fkjtest::load_corpus("fig1_bounded.fkj");

  SECTION("the empty run has width one") {
    CHECK(width_of_execution({initial_config(p)}) == 1);
  }

  SECTION("one worker beside the entry thread keeps width one") {
    auto trace = drive(
        p, [](const GlobalConfig& c) { return c.threads.size() == 2; }, 20);
    CHECK(width_of_execution(trace) == 1);
  }

  SECTION("two live workers of one template make width two") {
    auto trace =
        drive(p, [](const GlobalConfig& c) { return c.width() == 2; }, 40);
    CHECK(width_of_execution(trace) == 2);
    trace.pop_back();
    CHECK(width_of_execution(trace) == 1);
  }

  SECTION("fork-free programs stay at width one") {
    Program q = fkjtest::parse_ok("globals g; main { g := 1; g := g + 1; }");
    Exploration ex = explore(q);
    CHECK(ex.max_width == 1);
  }
}

TEST_CASE("step bookkeeping invariants") {
  Program p = fkjtest::load_corpus("fig1_bounded.fkj");
  Exploration ex = explore(p);

  SECTION("thread count moves only on fork and join") {
    std::mt19937_64 rng(99);
    for (int probe = 0; probe < 200; ++probe) {
      const GlobalConfig& cfg = ex.reachable[rng() % ex.reachable.size()];
      for (const auto& [step, next] : successors(p, cfg)) {
        long delta = static_cast<long>(next.threads.size()) -
                     static_cast<long>(cfg.threads.size());
        switch (step.stmt.kind) {
          case Statement::Kind::Fork: CHECK(delta == 1); break;
          case Statement::Kind::Join: CHECK(delta == -1); break;
          default: CHECK(delta == 0); break;
        }
        CHECK(step.partner.has_value() ==
              (step.stmt.kind == Statement::Kind::Join));
      }
    }
  }

  SECTION("only the start thread lacks an id") {
    for (const auto& cfg : ex.reachable) {
      int anonymous = 0;
      for (const auto& th : cfg.threads) {
        if (!th.tid.has_value()) {
          ++anonymous;
          CHECK(th.tmpl == "main");
        }
      }
      CHECK(anonymous <= 1);
    }
  }

  SECTION("stepping preserves remainder normalization") {
    for (const auto& cfg : ex.reachable)
      for (const auto& th : cfg.threads)
        if (th.rem.is_cmd()) CHECK(is_normalized(th.rem.cmd));
  }
}
