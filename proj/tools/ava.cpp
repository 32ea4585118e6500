#include <cstdlib>
#include <iostream>

#include "ava/cli.hpp"

int main(int argc, char** argv) {
  return ava::cli::run(argc, argv, std::cout, std::cerr,
                       [](const char* name) { return std::getenv(name); });
}
