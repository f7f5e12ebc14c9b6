#include "locality_lab/cli.hpp"

int main(int argc, char** argv) { return locality_lab::cli::run(argc, argv); }
