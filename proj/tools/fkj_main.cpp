#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "fkj/difftest.hpp"
#include "fkj/parse.hpp"

namespace {

// Exit codes: 0 verified/clean, 1 a failure was found, 2 inconclusive,
// 3 usage or parse problems.
constexpr int kOk = 0;
constexpr int kIncorrect = 1;
constexpr int kInconclusive = 2;
constexpr int kUsage = 3;

std::optional<fkj::Program> load_program(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << path << ": cannot open file\n";
    return std::nullopt;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  fkj::ParseResult r = fkj::parse_program(buf.str());
  if (!r.ok()) {
    std::cerr << fkj::render_diagnostics(r.diagnostics);
    return std::nullopt;
  }
  return std::move(r.program);
}

int run_verify(const std::string& path, int algorithm,
               const fkj::DriverOptions& opt, const std::string& format) {
  auto p = load_program(path);
  if (!p) return kUsage;
  fkj::Outcome o = fkj::verify(*p, algorithm, opt);
  std::cout << fkj::report(o, format);
  switch (o.result) {
    case fkj::Outcome::Result::Correct: return kOk;
    case fkj::Outcome::Result::Incorrect: return kIncorrect;
    case fkj::Outcome::Result::BetaLimitExceeded:
    case fkj::Outcome::Result::ResourceLimit: return kInconclusive;
  }
  return kUsage;
}

int run_petrify(const std::string& path, int beta, const std::string& dot_path,
                bool stats) {
  auto p = load_program(path);
  if (!p) return kUsage;
  fkj::PetriProgram net = fkj::petrify(*p, beta);
  std::vector<std::string> problems = fkj::validate(net);
  if (!problems.empty()) {
    for (const auto& s : problems) std::cerr << "invalid net: " << s << "\n";
    return kInconclusive;
  }
  if (stats) {
    std::cout << "places=" << net.places.size()
              << " transitions=" << net.transitions.size()
              << " variables=" << net.vars->size() << " beta=" << net.beta
              << "\n";
  }
  if (!dot_path.empty()) {
    std::ofstream out(dot_path);
    if (!out) {
      std::cerr << dot_path << ": cannot write\n";
      return kUsage;
    }
    out << fkj::to_dot(net);
  }
  return kOk;
}

int run_simulate(const std::string& path, size_t max_configs) {
  auto p = load_program(path);
  if (!p) return kUsage;
  fkj::ExploreLimits limits;
  limits.max_configs = max_configs;
  fkj::Exploration ex = fkj::explore(*p, limits);
  std::cout << "configurations=" << ex.reachable.size()
            << " erroneous=" << (ex.erroneous ? "true" : "false")
            << " max_width=" << ex.max_width
            << " exhausted=" << (ex.exhausted ? "true" : "false") << "\n";
  if (ex.erroneous) return kIncorrect;
  return ex.exhausted ? kOk : kInconclusive;
}

int run_difftest(uint64_t seed, int count) {
  fkj::DiffConfig cfg;
  cfg.seed = seed;
  cfg.count = count;
  fkj::DiffOutcome out = fkj::difftest(cfg);
  std::cout << out.report;
  return out.failed == 0 ? kOk : kIncorrect;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model checker for a small language with fork and join"};
  app.require_subcommand(1);

  std::string file;
  int algorithm = 1;
  fkj::DriverOptions opt;
  std::string format = "text";
  auto* verify = app.add_subcommand("verify", "Check a program's assertions");
  verify->add_option("file", file, "program to check")->required();
  verify->add_option("--algorithm", algorithm, "iteration schedule (1, 2, or 3)")
      ->check(CLI::Range(1, 3));
  verify->add_option("--beta-init", opt.beta_init, "starting thread limit")
      ->check(CLI::PositiveNumber);
  verify->add_option("--beta-max", opt.beta_max, "largest thread limit to try")
      ->check(CLI::PositiveNumber);
  verify
      ->add_option("--max-states", opt.limits.max_states,
                   "product state budget per check")
      ->check(CLI::PositiveNumber);
  verify
      ->add_option("--max-depth", opt.limits.max_depth,
                   "firing sequence length cap (0 = unbounded)");
  verify->add_option("--format", format, "report format")
      ->check(CLI::IsMember({"text", "json"}));

  std::string net_file;
  int beta = 1;
  std::string dot_path;
  bool stats = false;
  auto* petrify = app.add_subcommand("petrify", "Translate a program to a net");
  petrify->add_option("file", net_file, "program to translate")->required();
  petrify->add_option("--beta", beta, "thread limit")
      ->required()
      ->check(CLI::PositiveNumber);
  petrify->add_option("--dot", dot_path, "write the net in DOT format here");
  petrify->add_flag("--stats", stats, "print place/transition counts");

  std::string sim_file;
  size_t max_configs = 1'000'000;
  auto* simulate =
      app.add_subcommand("simulate", "Explore a program's configurations");
  simulate->add_option("file", sim_file, "program to explore")->required();
  simulate
      ->add_option("--max-configs", max_configs, "configuration budget")
      ->check(CLI::PositiveNumber);

  uint64_t seed = 42;
  int count = 100;
  auto* difftest = app.add_subcommand(
      "difftest", "Cross-check the checker against the interpreter");
  difftest->add_option("--seed", seed, "generator seed");
  difftest->add_option("--count", count, "number of generated programs")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (verify->parsed()) return run_verify(file, algorithm, opt, format);
    if (petrify->parsed()) return run_petrify(net_file, beta, dot_path, stats);
    if (simulate->parsed()) return run_simulate(sim_file, max_configs);
    if (difftest->parsed()) return run_difftest(seed, count);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
