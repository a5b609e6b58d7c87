#include "alpharobust/cli.hpp"

int main(int argc, char** argv) { return alpharobust::cli::main(argc, argv); }
