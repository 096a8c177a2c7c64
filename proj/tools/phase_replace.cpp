#include "phase_replace/config.hpp"

#include <fstream>
#include <iostream>

namespace pr = phase_replace;

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty() || args[0] == "--help" || args[0] == "-h") {
    std::cerr << "usage: phase-replace <verify-lemma|minimize|corollary-sweep|potential-check> "
                 "[--config FILE] [--key=value ...]\n";
    return args.empty() ? 2 : 0;
  }
  pr::RunConfig cfg;
  try {
    cfg = pr::parse_config(args);
  } catch (const pr::Error& e) {
    std::cerr << "phase-replace: " << e.what() << '\n';
    if (auto dir = pr::peek_output_dir(args)) pr::write_error_manifest(*dir, e.what());
    return 2;
  }
  const int status = pr::run(cfg);
  std::ifstream manifest(cfg.out / "manifest.txt");
  std::cout << manifest.rdbuf();
  return status;
}
