#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rotsim {

struct CriterionResult {
    int id = 0;
    std::string label;
    bool pass = false;
    std::string details;
};

// The acceptance suite: every criterion is evaluated at its fixed tolerance
// against the bundled defaults.
std::vector<CriterionResult> run_acceptance_criteria();

// Prints one PASS/FAIL line per criterion; returns true when all pass.
bool run_acceptance_suite(std::ostream& out);

} // namespace rotsim
