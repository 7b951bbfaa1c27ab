#include "rwrp/expcli.hpp"

int main(int argc, char** argv) { return rwrp::cli_main(argc, argv); }
