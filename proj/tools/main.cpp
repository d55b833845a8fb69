#include "advntk/experiments.hpp"

int main(int argc, char** argv) { return advntk::run_cli(argc, argv); }
