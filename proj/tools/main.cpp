#include <iostream>

#include "bellfit/cli.hpp"

int main(int argc, char** argv) { return bellfit::cli::run(argc, argv, std::cout, std::cerr); }
