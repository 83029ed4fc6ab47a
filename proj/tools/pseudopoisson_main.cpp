#include <iostream>
#include <string>
#include <vector>

#include "pseudopoisson/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return pseudopoisson::run_cli(args, std::cout, std::cerr);
}
