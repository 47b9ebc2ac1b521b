#include <iostream>

#include "grinent/cli.hpp"

int main(int argc, char** argv) {
  return grinent::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
