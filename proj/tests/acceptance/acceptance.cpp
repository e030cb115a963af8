// Runs every acceptance criterion and prints one line per criterion.
// Exit status is nonzero if any criterion fails.

#include <cstdio>
#include <iostream>

#include "mgt/validation.hpp"

int main() {
    int failed = 0;
    for (const auto& check : mgt::validation::all_criteria()) {
        const auto r = check();
        std::cout << mgt::validation::summary_line(r) << std::endl;
        failed += !r.passed;
    }
    std::cout << (failed ? "acceptance: " + std::to_string(failed) + " criteria failed" : std::string("acceptance: all criteria passed"))
              << std::endl;
    return failed ? 1 : 0;
}
