#include <iostream>

#include "tacplus/cli.hpp"

int main(int argc, char** argv) { return tacplus::run_cli(argc, argv, std::cout, std::cerr); }
