#include "cwpower/cli.hpp"

int main(int argc, char** argv) { return cwpower::cli::run(argc, argv); }
