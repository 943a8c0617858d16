#include "noisestab/cli.hpp"

int main(int argc, char** argv) { return noisestab::cli_main(argc, argv); }
