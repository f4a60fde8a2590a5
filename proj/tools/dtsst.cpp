#include <iostream>

#include "dtsst/cli.hpp"

int main(int argc, char** argv) {
    return dtsst::run_cli(argc, argv, std::cout, std::cerr);
}
