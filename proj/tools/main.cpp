#include <iostream>
#include <string>
#include <vector>

#include "qcomp/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return qcomp::run(args, std::cout, std::cerr);
}
