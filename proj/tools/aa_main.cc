#include <iostream>

#include "aa/cli.h"

int main(int argc, char** argv) { return aa::run_cli(argc, argv, std::cout, std::cerr); }
