#include "lpgia/cli.hpp"

int main(int argc, char** argv) { return lpgia::cli::run(argc, argv); }
