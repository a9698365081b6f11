#include "cli/commands.hpp"

int main(int argc, char** argv) { return g2cone::cli::run_main(argc, argv); }
