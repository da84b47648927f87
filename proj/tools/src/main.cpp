#include <iostream>

#include "sgp_app/commands.hpp"

int main(int argc, char** argv) { return sgp::app::run_cli(argc, argv, std::cout, std::cerr); }
