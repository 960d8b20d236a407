#include "geoinfer/cli.hpp"

int main(int argc, char** argv) { return geoinfer::run_cli(argc, argv); }
