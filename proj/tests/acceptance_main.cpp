#include "rwrp/acceptance.hpp"

int main() { return rwrp::run_acceptance(); }
