#include "nudge/cli.hpp"

int main(int argc, char** argv) { return nudge::cli::main(argc, argv); }
