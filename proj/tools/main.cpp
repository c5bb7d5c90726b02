#include "cli.hpp"

int main(int argc, char** argv) { return keyopt::cli::run(argc, argv); }
