// Acceptance suite driver: one pass/fail line per criterion; nonzero exit on
// any failure.

#include <cstdio>
#include <cstring>
#include <string>

#include "rcm/acceptance.hpp"

int main(int argc, char** argv) {
  std::string out_dir = "accept_out";
  rcm::accept::Options opt;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--out") == 0 && i + 1 < argc) out_dir = argv[++i];
    if (std::strcmp(argv[i], "--seed") == 0 && i + 1 < argc)
      opt.seed = std::strtoull(argv[++i], nullptr, 10);
    if (std::strcmp(argv[i], "--no-determinism") == 0) opt.run_determinism = false;
  }
  const auto rs = rcm::accept::run_all(opt, out_dir);
  const bool ok = rcm::accept::all_passed(rs);
  std::printf("%s: %zu criteria\n", ok ? "ALL PASS" : "FAILURES PRESENT", rs.size());
  return ok ? 0 : 1;
}
