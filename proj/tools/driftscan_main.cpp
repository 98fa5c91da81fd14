#include "driftscan/cli.hpp"

int main(int argc, char** argv) { return driftscan::run_cli(argc, argv); }
