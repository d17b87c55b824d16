#include <iostream>

#include "cfo_tools/cli.hpp"

int main(int argc, char** argv) { return cfo::tools::run_cli(argc, argv, std::cout, std::cerr); }
