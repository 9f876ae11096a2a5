#include "polaron/harness.hpp"

int main(int argc, char** argv) { return polaron::run_cli(argc, argv); }
