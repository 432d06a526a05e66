#include "dyson_eq/cli.hpp"

int main(int argc, char** argv) { return dyson_eq::cli::run(argc, argv); }
