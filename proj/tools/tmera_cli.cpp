#include "tmera/cli.hpp"

int main(int argc, char** argv) { return tmera::run_cli(argc, argv); }
