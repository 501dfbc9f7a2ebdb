#include <iostream>

#include "qgen/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return qgen::cli::run(args, std::cout, std::cerr);
}
