#include "momdyn/cli.hpp"

int main(int argc, char** argv) { return momdyn::run_cli(argc, argv); }
