#include <iostream>
#include <string>
#include <vector>

#include "lsched/config.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return lsched::cli_main(args, std::cout, std::cerr);
}
