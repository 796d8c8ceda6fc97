#include "mirror_bounds/cli.hpp"

int main(int argc, char** argv) { return mirror_bounds::cli_main(argc, argv); }
