#include "cli.hpp"

int main(int argc, char** argv) { return htsysid::cli::run(argc, argv); }
