#include "simboot/cli.hpp"

int main(int argc, char** argv) { return simboot::run_cli(argc, argv); }
