#include <iostream>

#include "changegpt/cli.hpp"

int main(int argc, char** argv) { return changegpt::run_cli(argc, argv, std::cout, std::cerr); }
