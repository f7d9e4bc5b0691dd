#include "gzero/cli.hpp"

int main(int argc, char** argv) { return gzero::cli::run_cli(argc, argv); }
