#include <iostream>

#include "llcp/cli.hpp"

int main(int argc, char** argv) { return llcp::cli::run(argc, argv, std::cout, std::cerr); }
