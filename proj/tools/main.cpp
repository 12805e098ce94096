#include "sas/cli.hpp"

int main(int argc, char** argv) { return sas::run_command(argc, argv); }
