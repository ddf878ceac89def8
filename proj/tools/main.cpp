#include "rawcycle/cli.hpp"

int main(int argc, char** argv) { return rawcycle::run_cli(argc, argv); }
