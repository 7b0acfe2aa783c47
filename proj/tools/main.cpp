#include <iostream>

#include "pibound/cli.hpp"

int main(int argc, char** argv) {
  return pibound::run_cli(argc, argv, std::cout, std::cerr);
}
