#include "meshlab/cli.hpp"

int main(int argc, char** argv) { return meshlab::run_cli(argc, argv); }
