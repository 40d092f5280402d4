#include "rotbec/cli.hpp"

int main(int argc, char** argv) { return rotbec::cli::run(argc, argv); }
