#include "bodse/cli.hpp"

int main(int argc, char** argv) { return bodse::cli::main(argc, argv); }
