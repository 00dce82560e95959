#include <iostream>
#include <string>
#include <vector>

#include "sefe/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return sefe::run_cli(args, std::cout, std::cerr);
}
