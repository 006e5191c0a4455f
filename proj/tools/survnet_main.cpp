#include "survnet/cli.hpp"

int main(int argc, char** argv) { return survnet::run_cli(argc, argv); }
