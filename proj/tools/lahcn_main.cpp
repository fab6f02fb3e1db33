#include <iostream>

#include "lahcn/cli.hpp"

int main(int argc, char** argv) { return lahcn::cli::run(argc, argv, std::cout, std::cerr); }
