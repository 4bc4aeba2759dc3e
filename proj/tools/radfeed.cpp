#include <iostream>
#include <string>
#include <vector>

#include "radfeed/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return radfeed::cli::run(args, std::cout, std::cerr);
}
