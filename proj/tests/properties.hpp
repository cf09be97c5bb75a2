#pragma once

// Invariant checks shared by the unit tests and the acceptance binary.

#include <string>
#include <vector>

namespace props {

struct Result {
    std::string name;
    bool ok = true;
    double worst = 0.0;
    std::string detail;
};

Result shift_isometry(unsigned seed);
Result cocycle(unsigned seed);
Result projector_invariance(unsigned seed);
Result green_jump(unsigned seed);
Result window_doubling(unsigned seed);

/// All of the above for one seed.
std::vector<Result> run_all(unsigned seed);

}  // namespace props
