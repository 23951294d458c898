#include <iostream>

#include "linbc/cli.hpp"

int main(int argc, char** argv) { return linbc::cli::run(argc, argv, std::cout, std::cerr); }
