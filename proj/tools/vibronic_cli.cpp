#include <iostream>
#include <string>
#include <vector>

#include "vibronic/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return vibronic::run_cli(args, std::cout, std::cerr);
}
