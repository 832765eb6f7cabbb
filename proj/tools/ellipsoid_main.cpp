#include "elfit/harness.hpp"

int main(int argc, char** argv) { return elfit::cli_main(argc, argv); }
