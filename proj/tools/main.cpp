#include "lrfit/cli.hpp"

int main(int argc, char** argv) { return lrfit::cli_main(argc, argv); }
