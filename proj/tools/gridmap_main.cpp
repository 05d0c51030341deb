#include <iostream>
#include <vector>

#include "gridmap/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return gridmap::cli_main(args, std::cout, std::cerr);
}
