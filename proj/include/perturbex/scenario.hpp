#pragma once

#include <perturbex/gapaudit.hpp>
#include <perturbex/gdms.hpp>

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace perturbex {

/// Config or input problems surface as schema errors (CLI exit code 2);
/// anything the numerics throw during a run maps to exit code 3.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EpsGrid {
    double start = 0.1;
    double ratio = 0.1;
    int count = 4;
    std::vector<double> points() const;
};

struct Observable {
    std::string name;
    DepthFn fn;
};

/// One batch job: a shift perturbation, a GDMS study, or a gap audit,
/// parsed from the versioned JSON config (schema 1).
struct Scenario {
    int schema = 1;
    std::string kind;  // "shift-perturbation" | "gdms" | "gap-audit"
    std::string name = "scenario";
    int order = 1;
    int depth = 1;
    EpsGrid grid;
    double theta_base = 0.5;

    std::optional<PotentialFamily> potential;  // shift-perturbation, gap-audit
    std::optional<GdmsSystem> gdms;            // gdms kind
    std::vector<Observable> observables;

    nlohmann::json raw;  // round-trip copy of the parsed config
};

Scenario parse_scenario(const nlohmann::json& j);
Scenario parse_scenario_file(const std::string& path);

struct RunOptions {
    bool strict = false;
    std::uint64_t seed = 0x5eed;
    std::string out_dir;
    par::Exec exec = par::Exec::openmp;
};

struct RunResult {
    int exit_code = 0;  // 0 ok, 1 verdict failure in strict mode, 3 numerical failure
    std::string coefficients;    // key=value lines
    std::string remainders_csv;  // epsilon,order,quantity,direct,formula,abs_diff
    nlohmann::json verdicts;
    std::string error;
};

/// Runs the scenario and, when out_dir is set, writes coefficients.txt,
/// remainders.csv and verdicts.json atomically (temp + rename).
RunResult run_scenario(const Scenario& sc, const RunOptions& opt);

void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace perturbex
