#include <iostream>

#include "perplab_cli/commands.hpp"

int main(int argc, char** argv) {
  return perplab::cli::run_cli(argc, argv, std::cout, std::cerr);
}
