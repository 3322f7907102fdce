#include <iostream>

#include "nes/cli.hpp"

int main(int argc, char **argv) { return nes::cli::dispatch(argc, argv, std::cout, std::cerr); }
