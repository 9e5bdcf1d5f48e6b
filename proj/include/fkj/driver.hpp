#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fkj/reach.hpp"
#include "json.hpp"

namespace fkj {

// Iterative verification: translate at a candidate thread limit, check, and
// raise the limit while it provably does not suffice. Three schedules of the
// same two checks: safety first per limit, bound first until it holds, or
// both at once as a single union check.

struct DriverOptions {
  int beta_init = 1;
  int beta_max = 8;
  ReachLimits limits;
};

struct IterationLog {
  int beta = 0;
  Specification::Kind spec = Specification::Kind::Safety;
  Verdict::Status result = Verdict::Status::Unknown;
  size_t states = 0;
  int64_t millis = 0;
};

struct Outcome {
  enum class Result : uint8_t {
    Correct,
    Incorrect,
    BetaLimitExceeded,
    ResourceLimit,
  };
  Result result = Result::ResourceLimit;
  int algorithm = 0;
  int beta = 0;  // final limit: conclusive one, or the cap that was hit
  std::vector<IterationLog> iterations;
  std::string details;  // what ran out, for ResourceLimit
  std::shared_ptr<const PetriProgram> net;  // net the counterexample lives in
  std::optional<Counterexample> cex;
  std::string trace;  // rendered counterexample, when Incorrect
};

inline std::string to_string(Specification::Kind k) {
  switch (k) {
    case Specification::Kind::Safety: return "safety";
    case Specification::Kind::Bound: return "bound";
    case Specification::Kind::Union: return "union";
  }
  throw internal_error("to_string: bad specification kind");
}

inline std::string to_string(Verdict::Status s) {
  switch (s) {
    case Verdict::Status::Satisfied: return "satisfied";
    case Verdict::Status::Violated: return "violated";
    case Verdict::Status::Unknown: return "unknown";
  }
  throw internal_error("to_string: bad verdict status");
}

inline std::string to_string(Outcome::Result r) {
  switch (r) {
    case Outcome::Result::Correct: return "correct";
    case Outcome::Result::Incorrect: return "incorrect";
    case Outcome::Result::BetaLimitExceeded: return "beta-limit-exceeded";
    case Outcome::Result::ResourceLimit: return "resource-limit";
  }
  throw internal_error("to_string: bad outcome result");
}

namespace detail {

inline Verdict timed_check(const PetriProgram& net, const Specification& spec,
                           const DriverOptions& opt, int beta, Outcome& o) {
  auto t0 = std::chrono::steady_clock::now();
  Verdict v = check(net, spec, opt.limits);
  auto t1 = std::chrono::steady_clock::now();
  IterationLog log;
  log.beta = beta;
  log.spec = spec.kind;
  log.result = v.status;
  log.states = v.states_explored;
  log.millis =
      std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
  o.iterations.push_back(log);
  return v;
}

inline void conclude_incorrect(Outcome& o, std::shared_ptr<PetriProgram> net,
                               Verdict&& v, int beta) {
  o.result = Outcome::Result::Incorrect;
  o.beta = beta;
  o.net = std::move(net);
  o.cex = std::move(v.cex);
  o.trace = render_counterexample(*o.net, *o.cex);
}

inline void conclude_resource_limit(Outcome& o, const Verdict& v, int beta) {
  o.result = Outcome::Result::ResourceLimit;
  o.beta = beta;
  o.details = v.limit;
}

}  // namespace detail

// Per limit: safety first, and only if safe, the bound check decides whether
// the limit was high enough.
inline Outcome algorithm1(const Program& p, const DriverOptions& opt = {}) {
  Outcome o;
  o.algorithm = 1;
  for (int beta = opt.beta_init; beta <= opt.beta_max; ++beta) {
    auto net = std::make_shared<PetriProgram>(petrify(p, beta));
    Specifications specs = specifications(*net);
    Verdict vs = detail::timed_check(*net, specs.safety, opt, beta, o);
    if (vs.status == Verdict::Status::Unknown) {
      detail::conclude_resource_limit(o, vs, beta);
      return o;
    }
    if (vs.status == Verdict::Status::Violated) {
      detail::conclude_incorrect(o, std::move(net), std::move(vs), beta);
      return o;
    }
    Verdict vb = detail::timed_check(*net, specs.bound, opt, beta, o);
    if (vb.status == Verdict::Status::Unknown) {
      detail::conclude_resource_limit(o, vb, beta);
      return o;
    }
    if (vb.status == Verdict::Status::Satisfied) {
      o.result = Outcome::Result::Correct;
      o.beta = beta;
      return o;
    }
  }
  o.result = Outcome::Result::BetaLimitExceeded;
  o.beta = opt.beta_max;
  return o;
}

// Find the smallest sufficient limit via the bound check alone, then decide
// safety once at that limit.
inline Outcome algorithm2(const Program& p, const DriverOptions& opt = {}) {
  Outcome o;
  o.algorithm = 2;
  for (int beta = opt.beta_init; beta <= opt.beta_max; ++beta) {
    auto net = std::make_shared<PetriProgram>(petrify(p, beta));
    Specifications specs = specifications(*net);
    Verdict vb = detail::timed_check(*net, specs.bound, opt, beta, o);
    if (vb.status == Verdict::Status::Unknown) {
      detail::conclude_resource_limit(o, vb, beta);
      return o;
    }
    if (vb.status == Verdict::Status::Violated) continue;
    Verdict vs = detail::timed_check(*net, specs.safety, opt, beta, o);
    if (vs.status == Verdict::Status::Unknown) {
      detail::conclude_resource_limit(o, vs, beta);
      return o;
    }
    if (vs.status == Verdict::Status::Violated) {
      detail::conclude_incorrect(o, std::move(net), std::move(vs), beta);
      return o;
    }
    o.result = Outcome::Result::Correct;
    o.beta = beta;
    return o;
  }
  o.result = Outcome::Result::BetaLimitExceeded;
  o.beta = opt.beta_max;
  return o;
}

// One search per limit over the union of both specifications; the kind of
// the first bad place reached decides between "raise the limit" and "real
// assertion failure".
inline Outcome algorithm3(const Program& p, const DriverOptions& opt = {}) {
  Outcome o;
  o.algorithm = 3;
  for (int beta = opt.beta_init; beta <= opt.beta_max; ++beta) {
    auto net = std::make_shared<PetriProgram>(petrify(p, beta));
    Specifications specs = specifications(*net);
    Verdict v = detail::timed_check(*net, specs.united, opt, beta, o);
    if (v.status == Verdict::Status::Unknown) {
      detail::conclude_resource_limit(o, v, beta);
      return o;
    }
    if (v.status == Verdict::Status::Satisfied) {
      o.result = Outcome::Result::Correct;
      o.beta = beta;
      return o;
    }
    bool failure = false;
    for (LocId pl : v.cex->violated)
      if (loc_of(pl).kind == ControlLocation::Kind::Prog) failure = true;
    if (failure) {
      detail::conclude_incorrect(o, std::move(net), std::move(v), beta);
      return o;
    }
  }
  o.result = Outcome::Result::BetaLimitExceeded;
  o.beta = opt.beta_max;
  return o;
}

inline Outcome verify(const Program& p, int algorithm,
                      const DriverOptions& opt = {}) {
  switch (algorithm) {
    case 1: return algorithm1(p, opt);
    case 2: return algorithm2(p, opt);
    case 3: return algorithm3(p, opt);
    default: throw std::invalid_argument("verify: algorithm must be 1, 2, or 3");
  }
}

namespace detail {

inline nlohmann::json value_to_json(const Value& v) {
  if (v.type() == Type::Bool) return v.as_bool();
  if (v.type() == Type::Int) {
    const Int& i = v.as_int();
    if (i >= std::numeric_limits<int64_t>::min() &&
        i <= std::numeric_limits<int64_t>::max())
      return static_cast<int64_t>(i);
    return i.str();
  }
  const ArrayValue& a = v.as_array();
  nlohmann::json entries = nlohmann::json::object();
  for (const auto& [k, x] : a.entries) entries[k.str()] = value_to_json(Value::of_int(x));
  return nlohmann::json{{"default", value_to_json(Value::of_int(a.def))},
                        {"entries", entries}};
}

}  // namespace detail

inline std::string report(const Outcome& o, const std::string& format) {
  if (format == "json") {
    nlohmann::json j;
    j["verdict"] = to_string(o.result);
    j["beta"] = o.beta;
    j["algorithm"] = o.algorithm;
    j["iterations"] = nlohmann::json::array();
    for (const IterationLog& it : o.iterations)
      j["iterations"].push_back({{"beta", it.beta},
                                 {"spec", to_string(it.spec)},
                                 {"result", to_string(it.result)},
                                 {"states", it.states},
                                 {"millis", it.millis}});
    if (o.result == Outcome::Result::ResourceLimit && !o.details.empty())
      j["details"] = o.details;
    if (o.cex && o.net) {
      nlohmann::json steps = nlohmann::json::array();
      const PetriProgram& n = *o.net;
      const Counterexample& cex = *o.cex;
      for (size_t i = 0; i < cex.transitions.size(); ++i) {
        const Transition& t = n.transitions[cex.transitions[i]];
        const ControlLocation& actor = loc_of(t.actor);
        nlohmann::json step;
        step["template"] = actor.tmpl;
        if (actor.slot == 0)
          step["instance"] = "main";
        else
          step["instance"] = actor.slot;
        step["statement"] = to_string(deinstantiate_label(t.label));
        step["line"] = t.head ? static_cast<int>(t.head->span.line) : 0;
        nlohmann::json globals = nlohmann::json::object();
        const std::vector<Value>& data = cex.data[i + 1];
        for (const auto& g : n.source->globals)
          globals[g] =
              detail::value_to_json(data[n.vars->index_of(InstVar::global(g))]);
        step["globals"] = globals;
        steps.push_back(step);
      }
      j["counterexample"] = steps;
    }
    return j.dump(2) + "\n";
  }

  std::string out = "verdict: " + to_string(o.result);
  out += " (beta=" + std::to_string(o.beta) +
         ", algorithm " + std::to_string(o.algorithm) + ")\n";
  if (!o.details.empty()) out += "details: " + o.details + "\n";
  out += "iterations:\n";
  for (const IterationLog& it : o.iterations)
    out += "  beta=" + std::to_string(it.beta) + " " + to_string(it.spec) +
           ": " + to_string(it.result) + " (" + std::to_string(it.states) +
           " states, " + std::to_string(it.millis) + " ms)\n";
  if (!o.trace.empty()) out += "counterexample:\n" + o.trace;
  return out;
}

}  // namespace fkj
