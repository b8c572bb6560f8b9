#include "cora/cli.hpp"

int main(int argc, char** argv) { return cora::cli::main_entry(argc, argv); }
