#include "mixagg/cli.hpp"

int main(int argc, char** argv) { return mixagg::cli::run(argc, argv); }
