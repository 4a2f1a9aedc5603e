#include <iostream>

#include "restrictlab/cli.hpp"

int main(int argc, char** argv) {
    return restrictlab::run_cli(argc, argv, std::cout, std::cerr);
}
