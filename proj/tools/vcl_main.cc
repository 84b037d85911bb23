#include <iostream>
#include <string>
#include <vector>

#include "vcl/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return vcl::RunCli(args, std::cout, std::cerr);
}
