#include "wildfire/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return wildfire::cli_main(argc, argv, std::cout, std::cerr); }
