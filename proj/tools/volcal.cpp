#include "volcal/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return volcal::cli::run(argc, argv, std::cout, std::cerr); }
