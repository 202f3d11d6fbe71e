#include "g2lab/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return g2lab::run_cli(argc, argv, std::cout, std::cerr); }
