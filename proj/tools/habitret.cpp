#include <iostream>

#include "habitret/cli.hpp"

int main(int argc, char** argv) { return habitret::cli::run(argc, argv, std::cout, std::cerr); }
