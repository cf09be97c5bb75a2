#pragma once

// Command-line front end: spectrum, solve, continue, admissible, index.

#include "homocont/seqspace.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace homocont {

/// Exit codes: 0 success, 1 usage error, 2 numerical failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Writes through a temporary sibling file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

struct BranchRecord {
    double s = 0.0;
    double lambda = 0.0;
    TruncatedSequence phi = TruncatedSequence::zeros(Window::symmetric(1), 1);
};

/// Reads `branch_phi.csv` (columns s, lambda, t, x1..xd; one block per point).
[[nodiscard]] std::vector<BranchRecord> read_branch_phi(std::istream& in);

}  // namespace homocont
