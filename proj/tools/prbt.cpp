#include <iostream>

#include "prbt/cli.hpp"

int main(int argc, char** argv) { return prbt::run(argc, argv, std::cout, std::cerr); }
