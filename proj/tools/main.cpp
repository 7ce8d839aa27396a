#include <iostream>
#include <string>
#include <vector>

#include "cpi/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cpi::run(args, std::cout, std::cerr);
}
