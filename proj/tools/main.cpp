#include "proxops/cli.hpp"

int main(int argc, char** argv) { return proxops::run_cli(argc, argv); }
