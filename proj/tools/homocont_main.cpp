#include "homocont/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return homocont::run_cli(argc, argv, std::cout, std::cerr);
}
