#include <iostream>

#include "slicebench/cli.hpp"

int main(int argc, char** argv) { return slicebench::run_cli(argc, argv, std::cout, std::cerr); }
