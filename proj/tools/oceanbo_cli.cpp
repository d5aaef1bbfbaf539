#include "oceanbo/cli/commands.hpp"

int main(int argc, char** argv) { return oceanbo::cli::run_cli(argc, argv); }
