#include "qpnn/cli.hpp"

int main(int argc, char** argv) { return qpnn::run_cli(argc, argv); }
