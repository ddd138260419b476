#include <iostream>

#include "ifpsync/cli.hpp"

int main(int argc, char** argv) { return ifpsync::cli::run(argc, argv, std::cout, std::cerr); }
