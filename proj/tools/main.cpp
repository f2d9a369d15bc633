#include "numsplit/cli.hpp"

int main(int argc, char** argv) { return numsplit::run_cli(argc, argv); }
