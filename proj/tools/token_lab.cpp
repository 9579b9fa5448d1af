#include "token_lab/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return token_lab::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
