#include "swis/cli.hpp"

int main(int argc, char** argv) { return swis::run_cli(argc, argv); }
