#include <iostream>
#include <string>
#include <vector>

#include "hqlab/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return hqlab::main_entry(args, std::cout, std::cerr);
}
