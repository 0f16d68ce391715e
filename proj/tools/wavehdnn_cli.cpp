#include <iostream>

#include "wavehdnn/cli.hpp"

int main(int argc, char** argv) {
  return wavehdnn::cli::run_cli(argc, argv, std::cout, std::cerr);
}
