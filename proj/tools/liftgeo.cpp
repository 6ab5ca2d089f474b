#include "liftgeo/cli.hpp"

int main(int argc, char** argv) { return liftgeo::run_cli(argc, argv); }
