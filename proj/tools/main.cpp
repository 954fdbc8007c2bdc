#include <iostream>
#include <string>
#include <vector>

#include "zenochem/cli_io.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return zenochem::cli_run(args, std::cout, std::cerr);
}
