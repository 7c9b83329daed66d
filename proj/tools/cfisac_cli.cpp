#include "cfisac/harness.hpp"

int main(int argc, char** argv) { return cfisac::cli_main(argc, argv); }
