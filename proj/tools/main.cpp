#include "lgc/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return lgc::cli::run(argc, argv, std::cout, std::cerr); }
