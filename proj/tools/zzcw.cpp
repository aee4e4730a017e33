#include <iostream>

#include "zzcw/cli.hpp"

int main(int argc, char** argv) { return zzcw::cli::run(argc, argv, std::cout, std::cerr); }
