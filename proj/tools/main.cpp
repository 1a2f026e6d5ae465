#include <iostream>

#include "twqr/cli.hpp"

int main(int argc, char** argv) { return twqr::cli::run(argc, argv, std::cout, std::cerr); }
