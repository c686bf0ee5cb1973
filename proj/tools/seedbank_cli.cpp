#include <iostream>

#include "seedbank/app.hpp"

int main(int argc, char** argv) { return seedbank::app::main(argc, argv, std::cout, std::cerr); }
