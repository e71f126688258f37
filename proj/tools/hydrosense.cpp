#include "hydrosense/cli.hpp"

int main(int argc, char** argv) { return hydrosense::cli::main(argc, argv); }
