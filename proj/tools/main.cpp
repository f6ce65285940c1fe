#include <iostream>
#include <string>
#include <vector>

#include "ruinopt/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return ruinopt::cli::run_cli(args, std::cout, std::cerr);
}
