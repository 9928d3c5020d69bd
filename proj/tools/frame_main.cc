#include <iostream>
#include <string>
#include <vector>

#include "frame/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return frame::cli::run(args, std::cout, std::cerr, frame::cli::Environment::from_process());
}
