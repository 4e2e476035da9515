#include "bioconv/harness.hpp"

int main(int argc, char** argv) { return bioconv::cli_main(argc, argv); }
