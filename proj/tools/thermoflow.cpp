#include <iostream>

#include "thermoflow/cli.hpp"

int main(int argc, char** argv) { return thermoflow::cli_main(argc, argv, std::cout, std::cerr); }
