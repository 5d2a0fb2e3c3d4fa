#include <iostream>

#include "mpst/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return mpst::run_cli(args, std::cin, std::cout, std::cerr);
}
