#pragma once

#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fkj/driver.hpp"
#include "fkj/interp.hpp"

namespace fkj {

// Differential harness: pit the translation-plus-reachability pipeline
// against the direct interpreter on small random programs. For each case the
// interpreter establishes the ground truth (thread width, whether any run
// fails an assertion, the exact set of reachable configurations); the net is
// then built at limits around that width and must agree on every count.

struct GenBounds {
  int max_extra_templates = 2;  // worker templates besides main
  int max_fork_sites = 4;       // program-wide
  int max_globals = 3;          // total variable budget
  int max_loop_iters = 3;       // main's single loop bound
};

struct DiffConfig {
  uint64_t seed = 42;
  int count = 100;
  GenBounds bounds;
  size_t max_interp_configs = 200'000;
  size_t max_product_states = 400'000;
  int max_shrink_evals = 200;
};

namespace detail {

// Raw engine draws with modulo keep the stream identical across standard
// library implementations, which the byte-identical report depends on.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}
  uint64_t next(uint64_t n) { return eng_() % n; }
  bool chance(uint64_t num, uint64_t den) { return next(den) < num; }

 private:
  std::mt19937_64 eng_;
};

class ProgramGen {
 public:
  ProgramGen(uint64_t seed, const GenBounds& b) : rng_(seed), b_(b) {}

  Program run() {
    int n_globals = 1 + static_cast<int>(rng_.next(b_.max_globals));
    for (int i = 0; i < n_globals; ++i) globals_.push_back("g" + std::to_string(i));
    // Fork-free programs stay interesting but rare; most cases should
    // exercise spawning.
    int n_workers = rng_.chance(1, 4)
                        ? 0
                        : 1 + static_cast<int>(rng_.next(b_.max_extra_templates));
    for (int i = 0; i < n_workers; ++i) workers_.push_back("w" + std::to_string(i));
    forks_left_ = b_.max_fork_sites;

    // A loop needs its own counter that nothing else writes; reserve the
    // last global for it.
    bool with_loop = n_globals >= 2 && rng_.chance(1, 2);
    if (with_loop) {
      counter_ = globals_.back();
      assignable_ = {globals_.begin(), globals_.end() - 1};
    } else {
      assignable_ = globals_;
    }

    std::vector<Cmd> main_body;
    // Write-before-read: every global starts with an explicit value.
    for (const auto& g : globals_)
      main_body.push_back(make_assign(g, sint(Int(rng_.next(3)))));
    int n_plain = 1 + static_cast<int>(rng_.next(2));
    for (int i = 0; i < n_plain; ++i) main_body.push_back(stmt(-1));
    if (!workers_.empty() && rng_.chance(2, 3))
      if (auto f = fork(-1)) main_body.push_back(*f);
    if (with_loop) main_body.push_back(loop());
    int n_joins = static_cast<int>(rng_.next(3));
    for (int i = 0; i < n_joins; ++i)
      main_body.push_back(make_join(sint(Int(rng_.next(3)))));
    if (rng_.chance(1, 2)) main_body.push_back(assertion());

    Program p;
    p.globals = globals_;
    p.templates.emplace_back("main", fold(main_body));
    for (int w = 0; w < n_workers; ++w) {
      std::vector<Cmd> body;
      int n = 1 + static_cast<int>(rng_.next(2));
      for (int i = 0; i < n; ++i) body.push_back(stmt(w));
      p.templates.emplace_back(workers_[w], fold(body));
    }
    std::vector<Diagnostic> diags = typecheck(p);
    if (!diags.empty())
      throw internal_error("generated program fails typecheck: " +
                           diags.front().message);
    return p;
  }

 private:
  static Cmd fold(const std::vector<Cmd>& stmts) {
    if (stmts.empty()) return make_assume(sbool(true));
    Cmd c = stmts.back();
    for (size_t i = stmts.size() - 1; i-- > 0;) c = make_seq(stmts[i], c);
    return c;
  }

  SExpr atom() {
    if (rng_.chance(1, 2)) return sint(Int(rng_.next(4)));
    return svar(globals_[rng_.next(globals_.size())]);
  }

  SExpr int_expr() {
    switch (rng_.next(3)) {
      case 0: return atom();
      case 1: return make_binary(ExprOp::Add, atom(), atom());
      default: return make_binary(ExprOp::Sub, atom(), atom());
    }
  }

  SExpr cmp_expr() {
    static constexpr ExprOp ops[] = {ExprOp::Lt, ExprOp::Le, ExprOp::Eq,
                                     ExprOp::Ne};
    return make_binary(ops[rng_.next(4)], int_expr(), atom());
  }

  Cmd assertion() { return make_assert(cmp_expr()); }

  Cmd assignment() {
    return make_assign(assignable_[rng_.next(assignable_.size())], int_expr());
  }

  std::optional<Cmd> fork(int from) {
    // Acyclic targets only (main = -1 may spawn anyone, worker i only
    // later workers), so the spawn graph can never feed back into a loop.
    // One fork site per worker keeps widths small enough to explore the
    // product exhaustively even one slot above the true width.
    std::vector<std::string> targets(workers_.begin() + (from + 1),
                                     workers_.end());
    if (targets.empty() || forks_left_ <= 0) return std::nullopt;
    if (from >= 0) {
      if (worker_forked_.size() <= static_cast<size_t>(from))
        worker_forked_.resize(workers_.size(), false);
      if (worker_forked_[from]) return std::nullopt;
      worker_forked_[from] = true;
    }
    --forks_left_;
    return make_fork(sint(Int(rng_.next(3))),
                     targets[rng_.next(targets.size())]);
  }

  // One statement of a template body; `from` is the worker index, -1 in main.
  Cmd stmt(int from, bool allow_fork = true) {
    switch (rng_.next(6)) {
      case 0:
      case 1: return assignment();
      case 2: return assertion();
      case 3:
        if (allow_fork)
          if (auto f = fork(from)) return *f;
        return assignment();
      case 4:
        return make_if(cmp_expr(), assignment(),
                       rng_.chance(1, 2) ? assertion() : assignment());
      default:
        if (allow_fork)
          if (auto f = fork(from)) return *f;
        return assignment();
    }
  }

  Cmd loop() {
    int iters = 1 + static_cast<int>(rng_.next(b_.max_loop_iters));
    std::vector<Cmd> inner;
    // A loop that spawns is the main source of width greater than one; it
    // gets the only fork site of the loop body so the width stays within
    // iteration count + 1.
    if (!workers_.empty())
      if (auto f = fork(-1)) inner.push_back(*f);
    int n = 1 + static_cast<int>(rng_.next(2));
    for (int i = 0; i < n; ++i) inner.push_back(stmt(-1, false));
    inner.push_back(
        make_assign(counter_, make_binary(ExprOp::Add, svar(counter_), sint(1))));
    std::vector<Cmd> out{
        make_assign(counter_, sint(0)),
        make_while(make_binary(ExprOp::Lt, svar(counter_), sint(iters)),
                   fold(inner))};
    return fold(out);
  }

  Rng rng_;
  GenBounds b_;
  std::vector<std::string> globals_;
  std::vector<std::string> workers_;
  std::vector<std::string> assignable_;
  std::vector<bool> worker_forked_;
  std::string counter_;
  int forks_left_ = 0;
};

}  // namespace detail

inline Program generate_program(uint64_t case_seed, const GenBounds& bounds) {
  return detail::ProgramGen(case_seed, bounds).run();
}

struct CaseResult {
  enum class Status : uint8_t { Pass, Fail, Skip } status;
  std::string detail;  // failure reason, or why skipped
  int width = 0;
  size_t configs = 0;
};

// The checked properties, one program at a time. Any returned Fail carries a
// human-readable reason; Skip means the interpreter could not finish within
// limits so there is no ground truth to compare against.
inline CaseResult run_differential_case(const Program& p,
                                        const DiffConfig& cfg) {
  CaseResult r;
  ExploreLimits il;
  il.max_configs = cfg.max_interp_configs;
  Exploration ex = explore(p, il);
  r.configs = ex.reachable.size();
  if (!ex.exhausted) {
    r.status = CaseResult::Status::Skip;
    r.detail = "interpreter closure exceeded " +
               std::to_string(cfg.max_interp_configs) + " configurations";
    return r;
  }
  int w = ex.max_width;
  r.width = w;

  std::unordered_set<GlobalConfig, GlobalConfigHash> interp_set(
      ex.reachable.begin(), ex.reachable.end());

  auto fail = [&](std::string why) {
    r.status = CaseResult::Status::Fail;
    r.detail = std::move(why);
    return r;
  };

  std::vector<int> betas;
  if (w - 1 >= 1) betas.push_back(w - 1);
  betas.push_back(w);
  betas.push_back(w + 1);

  for (int beta : betas) {
    PetriProgram net = petrify(p, beta);
    if (auto probs = validate(net); !probs.empty())
      return fail("beta=" + std::to_string(beta) +
                  ": net fails validation: " + probs.front());
    if (auto probs = fork_arity_violations(net); !probs.empty())
      return fail("beta=" + std::to_string(beta) + ": " + probs.front());

    ReachLimits rl;
    rl.max_states = cfg.max_product_states;
    ProductExploration px = explore_product(net, rl);
    if (!px.exhausted) {
      r.status = CaseResult::Status::Skip;
      r.detail = "product closure exceeded " +
                 std::to_string(cfg.max_product_states) + " states at beta=" +
                 std::to_string(beta);
      return r;
    }

    Specifications specs = specifications(net);
    bool bound_violated = false;
    bool safety_violated = false;
    std::unordered_set<GlobalConfig, GlobalConfigHash> net_set;
    for (const auto& [m, data] : px.states) {
      if (auto probs = coherence_violations(net, m); !probs.empty())
        return fail("beta=" + std::to_string(beta) +
                    ": incoherent reachable marking: " + probs.front());
      if (auto probs = minimal_slot_violations(net, m); !probs.empty())
        return fail("beta=" + std::to_string(beta) + ": " + probs.front());
      bool insufficient = false;
      for (LocId b : specs.bound.bad)
        if (marking_contains(m, b)) insufficient = true;
      for (LocId b : specs.safety.bad)
        if (marking_contains(m, b)) safety_violated = true;
      if (insufficient) {
        bound_violated = true;
        continue;  // overflow states have no interpreter counterpart
      }
      if (beta >= w) net_set.insert(conf(net, m, data));
    }

    // Width detection: the bound spec holds exactly when beta covers the
    // true width.
    if (bound_violated != (w > beta))
      return fail("beta=" + std::to_string(beta) + ": bound verdict " +
                  (bound_violated ? "violated" : "satisfied") +
                  " but oracle width is " + std::to_string(w));

    // A failure found under any limit must be a real one.
    if (safety_violated && !ex.erroneous)
      return fail("beta=" + std::to_string(beta) +
                  ": safety violated but no interpreter run fails");
    // With enough slots the search is also complete.
    if (beta >= w && !safety_violated && ex.erroneous)
      return fail("beta=" + std::to_string(beta) +
                  ": safety satisfied but the interpreter reaches a failure");

    if (beta >= w) {
      if (net_set.size() != interp_set.size())
        return fail("beta=" + std::to_string(beta) +
                    ": configuration sets differ in size: net " +
                    std::to_string(net_set.size()) + " vs interpreter " +
                    std::to_string(interp_set.size()));
      for (const GlobalConfig& c : net_set)
        if (!interp_set.count(c))
          return fail("beta=" + std::to_string(beta) +
                      ": net reaches a configuration the interpreter never "
                      "does");
    }

    // The driver must agree with the raw closure booleans.
    Verdict vb = check(net, specs.bound, rl);
    Verdict vs = check(net, specs.safety, rl);
    if ((vb.status == Verdict::Status::Violated) != bound_violated ||
        (vs.status == Verdict::Status::Violated) != safety_violated)
      return fail("beta=" + std::to_string(beta) +
                  ": targeted search disagrees with full closure");
  }

  r.status = CaseResult::Status::Pass;
  return r;
}

namespace detail {

inline std::vector<Cmd> split_seq(Cmd c) {
  std::vector<Cmd> out;
  while (c && c->kind == CmdKind::Seq) {
    out.push_back(c->a);
    c = c->b;
  }
  if (c) out.push_back(c);
  return out;
}

inline std::optional<Program> rebuild(
    const Program& base, const std::vector<std::vector<Cmd>>& bodies,
    const std::vector<bool>& keep) {
  Program p;
  p.globals = base.globals;
  for (size_t t = 0; t < base.templates.size(); ++t) {
    if (!keep[t]) continue;
    std::vector<Cmd> body = bodies[t];
    Cmd c = nullptr;
    if (body.empty()) {
      c = make_assume(sbool(true));
    } else {
      c = body.back();
      for (size_t i = body.size() - 1; i-- > 0;) c = make_seq(body[i], c);
    }
    p.templates.emplace_back(base.templates[t].first, c);
  }
  if (!typecheck(p).empty()) return std::nullopt;
  return p;
}

// Greedy structural shrink: drop whole templates, then single top-level
// statements, as long as the case still fails. Candidates that no longer
// typecheck (say, a fork whose target was dropped) are simply skipped.
inline Program shrink(Program failing, const DiffConfig& cfg) {
  int evals = 0;
  auto still_fails = [&](const Program& p) {
    if (evals >= cfg.max_shrink_evals) return false;
    ++evals;
    return run_differential_case(p, cfg).status == CaseResult::Status::Fail;
  };
  bool improved = true;
  while (improved && evals < cfg.max_shrink_evals) {
    improved = false;
    std::vector<std::vector<Cmd>> bodies;
    for (const auto& [name, body] : failing.templates)
      bodies.push_back(split_seq(body));
    // Whole templates first (never main).
    for (size_t t = 1; t < failing.templates.size() && !improved; ++t) {
      std::vector<bool> keep(failing.templates.size(), true);
      keep[t] = false;
      if (auto p = rebuild(failing, bodies, keep); p && still_fails(*p)) {
        failing = std::move(*p);
        improved = true;
      }
    }
    // Then individual statements.
    for (size_t t = 0; t < bodies.size() && !improved; ++t) {
      for (size_t i = 0; i < bodies[t].size() && !improved; ++i) {
        std::vector<std::vector<Cmd>> cut = bodies;
        cut[t].erase(cut[t].begin() + i);
        std::vector<bool> keep(failing.templates.size(), true);
        if (auto p = rebuild(failing, cut, keep); p && still_fails(*p)) {
          failing = std::move(*p);
          improved = true;
        }
      }
    }
  }
  return failing;
}

inline std::string indent_block(const std::string& text) {
  std::string out;
  size_t start = 0;
  while (start < text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    out += "    " + text.substr(start, end - start) + "\n";
    start = end + 1;
  }
  return out;
}

}  // namespace detail

struct DiffOutcome {
  int passed = 0;
  int failed = 0;
  int skipped = 0;
  std::string report;  // byte-stable for a given config
};

inline DiffOutcome difftest(const DiffConfig& cfg) {
  DiffOutcome out;
  std::string& rep = out.report;
  rep += "difftest seed=" + std::to_string(cfg.seed) +
         " count=" + std::to_string(cfg.count) + "\n";
  for (int i = 0; i < cfg.count; ++i) {
    // Distinct, stable stream per case; cases are independent.
    uint64_t case_seed = cfg.seed * 1'000'003ull + static_cast<uint64_t>(i);
    Program p = generate_program(case_seed, cfg.bounds);
    CaseResult r = run_differential_case(p, cfg);
    switch (r.status) {
      case CaseResult::Status::Pass:
        ++out.passed;
        rep += "case " + std::to_string(i) + ": pass width=" +
               std::to_string(r.width) + " configs=" +
               std::to_string(r.configs) + "\n";
        break;
      case CaseResult::Status::Skip:
        ++out.skipped;
        rep += "case " + std::to_string(i) + ": skip (" + r.detail + ")\n";
        break;
      case CaseResult::Status::Fail: {
        ++out.failed;
        rep += "case " + std::to_string(i) + ": FAIL width=" +
               std::to_string(r.width) + "\n";
        rep += "  reason: " + r.detail + "\n";
        rep += "  program:\n" + detail::indent_block(to_string(p));
        Program small = detail::shrink(p, cfg);
        rep += "  shrunk:\n" + detail::indent_block(to_string(small));
        rep += "  shrunk reason: " + run_differential_case(small, cfg).detail +
               "\n";
        break;
      }
    }
  }
  rep += "summary: passed=" + std::to_string(out.passed) +
         " failed=" + std::to_string(out.failed) +
         " skipped=" + std::to_string(out.skipped) + "\n";
  return out;
}

}  // namespace fkj
