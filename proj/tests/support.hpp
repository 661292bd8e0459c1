#ifndef VARCOMP_TESTS_SUPPORT_HPP
#define VARCOMP_TESTS_SUPPORT_HPP

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "varcomp/io.hpp"
#include "varcomp/powerflow.hpp"

namespace support {

inline std::string fixture(const std::string& rel) { return std::string(VARCOMP_FIXTURES) + "/" + rel; }

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Run {
  int exit_code = -1;
  std::string out;
  std::string err;
};

/// Per-process scratch directory, removed by the OS temp cleaner.
inline std::filesystem::path scratch() {
  static const auto dir = [] {
    auto d = std::filesystem::temp_directory_path() / ("varcomp_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(d);
    return d;
  }();
  return dir;
}

/// Runs the CLI with `args` (already shell-quoted where needed), capturing
/// stdout and stderr. `env` is prepended verbatim, e.g. "VARCOMP_SAMPLES=5".
inline Run cli(const std::string& args, const std::string& env = "") {
  static int counter = 0;
  const auto base = scratch() / ("run" + std::to_string(counter++));
  const std::string out = base.string() + ".out";
  const std::string err = base.string() + ".err";
  const std::string cmd = (env.empty() ? "" : "env " + env + " ") + std::string(VARCOMP_CLI) + " " + args + " >" + out +
                          " 2>" + err;
  const int status = std::system(cmd.c_str());
  Run r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

inline varcomp::Network pf3bus() { return varcomp::io::read_problem(fixture("problems/pf3bus.json")).network(); }

}  // namespace support

#endif  // VARCOMP_TESTS_SUPPORT_HPP
