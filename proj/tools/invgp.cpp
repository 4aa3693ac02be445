#include "invgp/cli.hpp"

int main(int argc, char** argv) { return invgp::cli::run(argc, argv); }
