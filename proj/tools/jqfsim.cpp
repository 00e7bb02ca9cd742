#include "jqfsim/cli.hpp"

int main(int argc, char** argv) { return jqfsim::run_cli(argc, argv); }
