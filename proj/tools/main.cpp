#include "grposim/cli.hpp"

int main(int argc, char** argv) { return grposim::run_cli(argc, argv); }
