#include <iostream>

#include "varsim/cli.hpp"

int main(int argc, char** argv) { return varsim::cli::main(argc, argv, std::cout, std::cerr); }
