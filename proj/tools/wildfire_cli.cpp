#include <iostream>

#include "wildfire/cli.hpp"

int main(int argc, char** argv) {
    return wildfire::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
