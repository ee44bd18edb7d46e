#include "logcog/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return logcog::run_cli(argc, argv, std::cout, std::cerr);
}
