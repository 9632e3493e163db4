#include <iostream>

#include "ipi/cli.hpp"

int main(int argc, char** argv) { return ipi::cli::run_cli(argc, argv, std::cout, std::cerr); }
