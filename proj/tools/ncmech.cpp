#include <iostream>

#include "ncmech/cli.hpp"

int main(int argc, char** argv) { return ncmech::cli_main(argc, argv, std::cout, std::cerr); }
