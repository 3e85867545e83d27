#include "memaudit/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return memaudit::cli_main({argv, argv + argc}, std::cout, std::cerr);
}
