#include "rcp1/cli.hpp"

int main(int argc, char** argv) { return rcp1::cli_main(argc, argv); }
