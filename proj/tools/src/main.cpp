#include <iostream>

#include "detlab/cli.hpp"

int main(int argc, char** argv) { return detlab::cli::run(argc, argv, std::cout, std::cerr); }
