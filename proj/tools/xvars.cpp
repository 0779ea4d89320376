#include <iostream>
#include <string>
#include <vector>

#include "xvars/cli/app.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return xvars::cli::run(args, std::cin, std::cout, std::cerr);
}
