#include "fraccyl/cli.hpp"

int main(int argc, char** argv) { return fraccyl::cli_main(argc, argv); }
