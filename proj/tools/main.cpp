#include "cli.hpp"

int main(int argc, char** argv) { return wmt::cli::run_cli(argc, argv); }
