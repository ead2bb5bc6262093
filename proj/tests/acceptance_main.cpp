#include <iostream>

#include "rotsim/selftest.hpp"

int main() {
    const bool ok = rotsim::run_acceptance_suite(std::cout);
    return ok ? 0 : 1;
}
