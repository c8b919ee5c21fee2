#include <iostream>

#include "narrative/cli.h"

int main(int argc, char **argv) {
  return narrative::cli::Run(argc, argv, std::cout, std::cerr);
}
