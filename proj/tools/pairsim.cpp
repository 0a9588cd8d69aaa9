#include <iostream>

#include "pairsim/cli.hpp"

int main(int argc, char** argv) { return pairsim::run_cli(argc, argv, std::cout, std::cerr); }
