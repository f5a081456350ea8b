#include "swdiff/cli.hpp"

int main(int argc, char** argv) { return swdiff::cli::run(argc, argv); }
