#include <iostream>
#include <string>
#include <vector>

#include "pace/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return pace::cli::dispatch(args, std::cout, std::cerr);
}
