#include <iostream>

#include "deepeval/cli.h"

int main(int argc, char** argv) {
  return deepeval::RunCli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
