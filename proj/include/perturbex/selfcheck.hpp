#pragma once

#include <perturbex/parallel.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace perturbex {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    double max_err = 0.0;  // worst error in units of the criterion tolerance
    std::string note;
};

struct SelfcheckOptions {
    /// When positive, replaces every criterion tolerance (the PERTURBEX_TOL
    /// override); defaults come from the per-criterion definitions.
    double tol_override = 0.0;
    std::uint64_t seed = 0x5eed;
    par::Exec exec = par::Exec::openmp;
};

/// The embedded fixture suite: one entry per acceptance criterion, each run
/// at its pinned tolerance.
std::vector<CriterionResult> run_acceptance_suite(const SelfcheckOptions& opt = {});

}  // namespace perturbex
