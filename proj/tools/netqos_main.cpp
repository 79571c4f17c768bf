#include "netqos/cli.hpp"

int main(int argc, char** argv) { return netqos::run(argc, argv); }
