#include "corank/cli.hpp"

int main(int argc, char** argv) { return corank::cli::run(argc, argv); }
