#include "pff/cli.hpp"

int main(int argc, char** argv) { return pff::run_cli(argc, argv); }
