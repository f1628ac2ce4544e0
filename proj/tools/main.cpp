#include "ambmerton/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return ambmerton::cli::run(argc, argv, std::cout, std::cerr); }
