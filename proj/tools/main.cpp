#include <iostream>

#include "qcomm/cli.hpp"

int main(int argc, char** argv) { return qcomm::cli::main(argc, argv, std::cout, std::cerr); }
