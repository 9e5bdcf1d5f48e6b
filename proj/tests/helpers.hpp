#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "fkj/parse.hpp"

#ifndef FKJ_PROGRAM_DIR
#define FKJ_PROGRAM_DIR "programs"
#endif

namespace fkjtest {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string corpus_path(const std::string& name) {
  return std::string(FKJ_PROGRAM_DIR) + "/" + name;
}

inline fkj::Program load_corpus(const std::string& name) {
  auto r = fkj::parse_program(read_file(corpus_path(name)));
  if (!r.ok())
    throw std::runtime_error("corpus program " + name + " is broken:\n" +
                             fkj::render_diagnostics(r.diagnostics));
  return *r.program;
}

inline fkj::Program parse_ok(const std::string& src) {
  auto r = fkj::parse_program(src);
  if (!r.ok())
    throw std::runtime_error("test program is broken:\n" +
                             fkj::render_diagnostics(r.diagnostics));
  return *r.program;
}

}  // namespace fkjtest
