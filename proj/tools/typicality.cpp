#include <iostream>

#include "typicality/cli.hpp"

int main(int argc, char** argv) {
  return typicality::run_cli(argc, argv, std::cout, std::cerr);
}
