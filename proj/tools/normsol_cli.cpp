#include "normsol/cli.hpp"

int main(int argc, char **argv) { return normsol::cli::main(argc, argv); }
