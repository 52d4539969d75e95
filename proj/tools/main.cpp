#include "cli.hpp"

int main(int argc, char** argv) { return sicl::cli::run(argc, argv); }
