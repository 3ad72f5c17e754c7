#include "qgeom/cli.hpp"

int main(int argc, char **argv) { return qgeom::cli::run(argc, argv); }
