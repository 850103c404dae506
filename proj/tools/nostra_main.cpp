#include <iostream>
#include <string>
#include <vector>

#include "nostra/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return nostra::run_cli(args, std::cout, std::cerr);
}
