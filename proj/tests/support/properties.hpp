#pragma once

// Randomised invariant checks shared by the unit tests and the acceptance
// binary.

#include <cstdint>
#include <string>
#include <vector>

namespace props {

struct Result {
    std::string name;
    int cases = 0;
    int failures = 0;
    double worst = 0.0;      // largest observed violation
    double tolerance = 0.0;
    std::string first_failure;

    bool ok() const { return cases > 0 && failures == 0; }
};

Result diagonal_conservation(int cases, std::uint64_t seed);
Result kappa_zero_stasis(int cases, std::uint64_t seed);
Result beta_zero_uniformity(int cases, std::uint64_t seed);
Result chi_branch_mirror(int cases, std::uint64_t seed);
Result global_phase_covariance(int cases, std::uint64_t seed);
Result affine_structure(int cases, std::uint64_t seed);
Result conjugation_symmetry(int cases, std::uint64_t seed);

std::vector<Result> all(int cases, std::uint64_t seed);

}  // namespace props
