// End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
// the exit code is 0 only if every criterion passes. The sweep behind
// criteria 2-5 and 7 runs the interpreter and the checker over the example
// corpus plus a fixed batch of generated programs and cross-validates every
// verdict, marking, and counterexample it sees.

#include <chrono>
#include <cstdio>
#include <string>
#include <unordered_set>
#include <vector>

#include "fkj/difftest.hpp"
#include "fkj/driver.hpp"
#include "helpers.hpp"

using namespace fkj;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

bool replay_counterexample(const PetriProgram& n, const Counterexample& cex) {
  if (cex.markings.size() != cex.transitions.size() + 1) return false;
  if (cex.data.size() != cex.transitions.size() + 1) return false;
  Marking m = n.initial;
  std::vector<Value> d = initial_data(n);
  if (cex.markings.front() != m || cex.data.front() != d) return false;
  for (size_t i = 0; i < cex.transitions.size(); ++i) {
    uint32_t ti = cex.transitions[i];
    if (ti >= n.transitions.size()) return false;
    if (!subset_of(n.transitions[ti].pre, m)) return false;
    auto next = apply_label(n, n.transitions[ti].label, d);
    if (!next) return false;
    m = fire(n, m, ti);
    d = std::move(*next);
    if (m != cex.markings[i + 1] || d != cex.data[i + 1]) return false;
  }
  for (LocId b : cex.violated)
    if (marking_contains(m, b)) return true;
  return false;
}

// Shared evidence for criteria 2-5 and 7.
struct Sweep {
  long programs = 0;
  long bound_checks = 0, bound_mismatches = 0;
  long safety_checks = 0, safety_mismatches = 0;
  long markings = 0, incoherent = 0, not_1safe = 0, minimal_violations = 0;
  long nets = 0, arity_violations = 0;
  long conf_programs = 0, conf_mismatches = 0;
  long replays = 0, replay_failures = 0;
  long incomplete = 0;  // explorations that hit a budget (should never)
  double seconds = 0;
};

void sweep_markings(Sweep& s, const PetriProgram& net) {
  ++s.nets;
  s.arity_violations += static_cast<long>(fork_arity_violations(net).size());
  ProductExploration ex = explore_product(net, {.max_states = 400'000});
  if (!ex.exhausted) {
    ++s.incomplete;
    return;
  }
  for (const auto& [m, data] : ex.states) {
    ++s.markings;
    for (size_t i = 1; i < m.size(); ++i)
      if (m[i - 1] >= m[i]) ++s.not_1safe;
    s.incoherent += static_cast<long>(coherence_violations(net, m).size());
    s.minimal_violations +=
        static_cast<long>(minimal_slot_violations(net, m).size());
  }
}

// One program: compare the interpreter's exhaustive verdicts against the
// checker at the limits around the measured width.
void sweep_finite(Sweep& s, const Program& p) {
  ++s.programs;
  Exploration oracle = explore(p, {.max_configs = 200'000});
  if (!oracle.exhausted) {
    ++s.incomplete;
    return;
  }
  int w = oracle.max_width;

  std::unordered_set<GlobalConfig, GlobalConfigHash> oracle_set(
      oracle.reachable.begin(), oracle.reachable.end());

  std::vector<int> betas;
  if (w > 1) betas.push_back(w - 1);
  betas.push_back(w);
  betas.push_back(w + 1);

  for (int beta : betas) {
    PetriProgram net = petrify(p, beta);
    Specifications specs = specifications(net);
    sweep_markings(s, net);

    ++s.bound_checks;
    Verdict vb = check(net, specs.bound, {.max_states = 400'000});
    bool want_violated = w > beta;
    if (vb.status == Verdict::Status::Unknown) {
      ++s.incomplete;
    } else if ((vb.status == Verdict::Status::Violated) != want_violated) {
      ++s.bound_mismatches;
    }
    if (vb.cex) {
      ++s.replays;
      if (!replay_counterexample(net, *vb.cex)) ++s.replay_failures;
    }

    if (beta >= w) {
      ++s.safety_checks;
      Verdict vs = check(net, specs.safety, {.max_states = 400'000});
      if (vs.status == Verdict::Status::Unknown) {
        ++s.incomplete;
      } else if ((vs.status == Verdict::Status::Violated) !=
                 oracle.erroneous) {
        ++s.safety_mismatches;
      }
      if (vs.cex) {
        ++s.replays;
        if (!replay_counterexample(net, *vs.cex)) ++s.replay_failures;
      }
    }

    if (beta == w) {
      // The de-instantiated overflow-free product states must be exactly
      // the interpreter's reachable configurations.
      ++s.conf_programs;
      ProductExploration ex = explore_product(net, {.max_states = 400'000});
      std::unordered_set<GlobalConfig, GlobalConfigHash> mapped;
      bool ok = ex.exhausted;
      for (const auto& [m, data] : ex.states) {
        bool overflow = false;
        for (LocId q : m)
          if (loc_of(q).kind == ControlLocation::Kind::Insufficient)
            overflow = true;
        if (overflow) continue;
        GlobalConfig c = conf(net, m, data);
        if (!oracle_set.count(c)) ok = false;
        mapped.insert(std::move(c));
      }
      if (mapped.size() != oracle_set.size()) ok = false;
      if (!ok) ++s.conf_mismatches;
    }
  }
}

// Unbounded-width program: any execution already witnesses more width than
// the tested limits, so every bound check must fail.
void sweep_unbounded(Sweep& s, const Program& p, int witnessed) {
  ++s.programs;
  for (int beta = 1; beta <= 4 && beta < witnessed; ++beta) {
    PetriProgram net = petrify(p, beta);
    sweep_markings(s, net);
    ++s.bound_checks;
    Verdict vb = check(net, specifications(net).bound, {.max_states = 400'000});
    if (vb.status != Verdict::Status::Violated) ++s.bound_mismatches;
    if (vb.cex) {
      ++s.replays;
      if (!replay_counterexample(net, *vb.cex)) ++s.replay_failures;
    }
  }
}

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  if (!pass) ++g_failures;
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion,
              detail.c_str());
  std::fflush(stdout);
}

std::string plural(long n, const std::string& what) {
  if (n == 1) return "1 " + what;
  bool es = what.size() >= 2 && what.compare(what.size() - 2, 2, "ch") == 0;
  return std::to_string(n) + " " + what + (es ? "es" : "s");
}

std::string fmt_seconds(double secs) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2fs", secs);
  return buf;
}

}  // namespace

int main() {
  try {
    // Criterion 1: the bounded two-worker example settles at limit 2 under
    // all three schedules, cheaply.
    {
      Program p = fkjtest::load_corpus("fig1_bounded.fkj");
      auto t0 = std::chrono::steady_clock::now();
      Outcome o1 = algorithm1(p);
      Outcome o2 = algorithm2(p);
      Outcome o3 = algorithm3(p);
      double secs = seconds_since(t0);

      bool pass = true;
      std::string why;
      for (const Outcome* o : {&o1, &o2, &o3}) {
        if (o->result != Outcome::Result::Correct || o->beta != 2) {
          pass = false;
          why += " algorithm " + std::to_string(o->algorithm) + ": " +
                 to_string(o->result) + " beta=" + std::to_string(o->beta) +
                 ";";
        }
        for (const IterationLog& it : o->iterations)
          if (it.states >= 100'000) {
            pass = false;
            why += " an iteration used " + std::to_string(it.states) +
                   " states;";
          }
      }
      int bound2 = 0;
      for (const IterationLog& it : o2.iterations)
        if (it.spec == Specification::Kind::Bound) ++bound2;
      if (bound2 != 2) {
        pass = false;
        why += " schedule 2 ran " + std::to_string(bound2) +
               " bound checks, want 2;";
      }
      if (o1.iterations.size() != 4) {
        pass = false;
        why += " schedule 1 ran " + std::to_string(o1.iterations.size()) +
               " checks, want 4;";
      }
      if (secs >= 10.0) {
        pass = false;
        why += " took " + fmt_seconds(secs) + ";";
      }
      report(1, pass,
             pass ? "all three schedules: correct at beta=2 (4 checks on "
                    "schedule 1, 2 bound checks on schedule 2, " +
                        fmt_seconds(secs) + ")"
                  : "fig1_bounded:" + why);
    }

    // Criteria 2-5 and 7 share one sweep over the corpus and the generated
    // batch.
    Sweep s;
    {
      auto t0 = std::chrono::steady_clock::now();
      for (const char* name : {"fig1_bounded.fkj", "fig1_buggy.fkj",
                               "fig8_freshid.fkj", "width3.fkj"})
        sweep_finite(s, fkjtest::load_corpus(name));

      for (const char* name :
           {"infinite_width_safe.fkj", "infinite_width_buggy.fkj"}) {
        Program p = fkjtest::load_corpus(name);
        Exploration probe = explore(p, {.max_configs = 2000});
        sweep_unbounded(s, p, probe.max_width);
      }

      GenBounds bounds;
      for (int i = 0; i < 100; ++i) {
        uint64_t case_seed = 42ull * 1'000'003ull + static_cast<uint64_t>(i);
        sweep_finite(s, generate_program(case_seed, bounds));
      }
      s.seconds = seconds_since(t0);
    }

    report(2,
           s.bound_mismatches == 0 && s.incomplete == 0 && s.seconds < 300.0,
           "thread-width detection: " + plural(s.bound_mismatches, "mismatch") +
               " in " + std::to_string(s.bound_checks) + " bound checks over " +
               std::to_string(s.programs) + " programs (" +
               plural(s.incomplete, "incomplete exploration") + ", sweep " +
               fmt_seconds(s.seconds) + ")");

    report(3, s.safety_mismatches == 0 && s.incomplete == 0,
           "safety agreement: " + plural(s.safety_mismatches, "mismatch") +
               " in " + std::to_string(s.safety_checks) +
               " safety checks at sufficient limits");

    report(4,
           s.incoherent == 0 && s.not_1safe == 0 && s.arity_violations == 0 &&
               s.minimal_violations == 0,
           "structural invariants: " + std::to_string(s.markings) +
               " reachable markings, " + plural(s.incoherent, "coherence violation") +
               ", " + plural(s.not_1safe, "duplicate token") + ", " +
               plural(s.arity_violations, "fork arity violation") + " in " +
               std::to_string(s.nets) + " nets, " +
               plural(s.minimal_violations, "minimal-slot violation"));

    report(5, s.conf_mismatches == 0,
           "configuration sets: " + plural(s.conf_mismatches, "mismatch") +
               " in " + std::to_string(s.conf_programs) +
               " width-exact comparisons");

    // Criterion 6: unbounded-width programs still terminate usefully.
    {
      auto t0 = std::chrono::steady_clock::now();
      Outcome buggy =
          algorithm1(fkjtest::load_corpus("infinite_width_buggy.fkj"));
      Outcome safe = algorithm2(fkjtest::load_corpus("infinite_width_safe.fkj"),
                                {.beta_init = 1, .beta_max = 4});
      double secs = seconds_since(t0);

      if (buggy.cex && buggy.net) {
        ++s.replays;
        if (!replay_counterexample(*buggy.net, *buggy.cex))
          ++s.replay_failures;
      }

      bool pass = buggy.result == Outcome::Result::Incorrect &&
                  buggy.beta == 1 &&
                  safe.result == Outcome::Result::BetaLimitExceeded &&
                  safe.beta == 4 && secs < 10.0;
      report(6, pass,
             pass ? "divergence: buggy loop incorrect at beta=1, safe loop "
                    "stops at the beta cap (" +
                        fmt_seconds(secs) + ")"
                  : "divergence: got " + to_string(buggy.result) + " beta=" +
                        std::to_string(buggy.beta) + " and " +
                        to_string(safe.result) + " beta=" +
                        std::to_string(safe.beta) + " in " +
                        fmt_seconds(secs));
    }

    report(7, s.replay_failures == 0 && s.replays > 0,
           "counterexample replay: " + plural(s.replay_failures, "failure") +
               " in " + std::to_string(s.replays) + " replays");
  } catch (const std::exception& e) {
    std::printf("FAIL: unexpected exception: %s\n", e.what());
    return 1;
  }

  return g_failures == 0 ? 0 : 1;
}
