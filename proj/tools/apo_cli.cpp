#include "apo/cli.hpp"

int main(int argc, char** argv) { return apo::cli_main(argc, argv); }
