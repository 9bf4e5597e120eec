#include "regenn/cli.hpp"

int main(int argc, char** argv) { return regenn::cli::run(argc, argv); }
