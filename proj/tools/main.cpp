#include "ncfem/cli.hpp"

int main(int argc, char** argv) { return ncfem::run_cli(argc, argv); }
