#include <iostream>
#include <string>
#include <vector>

#include "shadowspec_cli/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return shadowspec::cli::main_entry(args, std::cout, std::cerr);
}
