#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return stg::cli::run_cli(argc, argv, std::cout, std::cerr); }
