#include <iostream>

#include "diffmean/cli.hpp"

int main(int argc, char** argv) { return diffmean::dispatch(argc, argv, std::cout, std::cerr); }
