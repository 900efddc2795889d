#include "cli.hpp"

int main(int argc, char** argv) { return irsr::cli::cli_main(argc, argv); }
