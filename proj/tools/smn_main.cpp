#include <iostream>

#include "smn/cli.hpp"

int main(int argc, char** argv) { return smn::cli::run(argc, argv, std::cout, std::cerr); }
