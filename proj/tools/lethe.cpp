#include <iostream>
#include <string>
#include <vector>

#include "lethe/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return lethe::run_cli(args, std::cout, std::cerr);
}
