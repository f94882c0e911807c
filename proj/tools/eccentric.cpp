#include "eccentric/cli.hpp"

int main(int argc, char **argv) { return eccentric::cli::run(argc, argv); }
