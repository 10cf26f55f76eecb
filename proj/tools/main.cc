#include "ldalink/cli.h"

int main(int argc, char** argv) { return ldalink::run_cli(argc, argv); }
