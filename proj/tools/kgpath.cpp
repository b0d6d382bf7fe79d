#include <iostream>

#include "kgpath/cli.hpp"

int main(int argc, char** argv) { return kgpath::run_cli(argc, argv, std::cout, std::cerr); }
