#include <iostream>

#include "lowimpact/cli.hpp"

int main(int argc, char** argv) { return lowimpact::run_cli(argc, argv, std::cout, std::cerr); }
