#include <iostream>
#include <string>
#include <vector>

#include "layerprobe/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return layerprobe::run_cli(args, std::cout, std::cerr);
}
