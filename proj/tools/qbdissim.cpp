#include "qbd/cli.hpp"

int main(int argc, char** argv) { return qbd::cli::main_entry(argc, argv); }
