#include <iostream>
#include <string>
#include <vector>

#include "nbsde/cli.hpp"

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv, argv + argc);
    return nbsde::run_cli(std::move(args), std::cout, std::cerr);
}
