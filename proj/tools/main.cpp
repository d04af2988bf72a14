#include "itrp/cli.hpp"

int main(int argc, char** argv) { return itrp::run_cli(argc, argv); }
