#include <iostream>

#include "indexmark/cli.hpp"

int main(int argc, char** argv) { return indexmark::run_cli(argc, argv, std::cout, std::cerr); }
