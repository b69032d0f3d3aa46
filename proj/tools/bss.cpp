#include "bss/cli.hpp"

int main(int argc, char** argv) { return bss::run_cli(argc, argv); }
