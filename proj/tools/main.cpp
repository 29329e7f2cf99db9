#include "cli.hpp"

int main(int argc, char** argv) { return sntf::cli::run(argc, argv); }
