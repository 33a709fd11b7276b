#include <iostream>

#include "lrcone/app.hpp"

int main(int argc, char **argv) { return lrcone::app::main_entry(argc, argv, std::cout, std::cerr); }
