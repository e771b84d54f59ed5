#include "popsize/experiments.hpp"

int main(int argc, char** argv)
{
    return popsize::experiments::cli_main(argc, argv);
}
