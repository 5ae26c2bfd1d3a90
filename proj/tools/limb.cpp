#include <iostream>

#include "limb/cli.hpp"

int main(int argc, char** argv) { return limb::cli::run(argc, argv, std::cout, std::cerr); }
