#include <perturbex/scenario.hpp>
#include <perturbex/selfcheck.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>

namespace {

double tol_override_from_env() {
    const char* env = std::getenv("PERTURBEX_TOL");
    if (!env || !*env) return 0.0;
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end == env || v <= 0.0) {
        std::cerr << "PERTURBEX_TOL must be a positive number\n";
        std::exit(2);
    }
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"perturbex: asymptotic perturbation expansions of transfer operators"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    bool strict = false;
    bool json_output = false;
    std::uint64_t seed = 0x5eed;
    bool serial = false;

    CLI::App* run = app.add_subcommand("run", "run a scenario config");
    run->add_option("config", config_path, "JSON scenario (schema 1)")->required();
    run->add_flag("--strict", strict, "exit 1 when a verdict fails");
    run->add_option("--seed", seed, "seed for randomized norm brackets");
    run->add_option("--out", out_dir, "output directory for reports");
    run->add_flag("--serial", serial, "disable the OpenMP kernels");

    CLI::App* selfcheck = app.add_subcommand("selfcheck", "run the embedded fixture suite");
    selfcheck->add_flag("--json", json_output, "machine-readable results");
    selfcheck->add_option("--seed", seed, "seed for randomized norm brackets");
    selfcheck->add_flag("--serial", serial, "disable the OpenMP kernels");

    CLI11_PARSE(app, argc, argv);

    const auto exec = serial ? perturbex::par::Exec::serial : perturbex::par::Exec::openmp;

    if (run->parsed()) {
        perturbex::Scenario sc;
        try {
            sc = perturbex::parse_scenario_file(config_path);
        } catch (const perturbex::SchemaError& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return 2;
        }
        perturbex::RunOptions opt;
        opt.strict = strict;
        opt.seed = seed;
        opt.out_dir = out_dir;
        opt.exec = exec;
        auto res = perturbex::run_scenario(sc, opt);
        if (res.exit_code == 3) {
            std::cerr << "numerical failure: " << res.error << "\n";
            return 3;
        }
        std::cout << res.coefficients;
        if (out_dir.empty()) {
            std::cout << res.remainders_csv;
            std::cout << res.verdicts.dump(2) << "\n";
        } else {
            std::cout << "reports written to " << out_dir << "\n";
        }
        return res.exit_code;
    }

    perturbex::SelfcheckOptions opt;
    opt.tol_override = tol_override_from_env();
    opt.seed = seed;
    opt.exec = exec;
    auto results = perturbex::run_acceptance_suite(opt);

    bool all_pass = true;
    if (json_output) {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& r : results) {
            nlohmann::json e;
            e["id"] = r.id;
            e["name"] = r.name;
            e["pass"] = r.pass;
            e["max_err_in_tol_units"] = r.max_err;
            e["note"] = r.note;
            j.push_back(std::move(e));
            all_pass = all_pass && r.pass;
        }
        std::cout << j.dump(2) << "\n";
    } else {
        for (const auto& r : results) {
            std::printf("[%s] criterion %d: %s (max_err=%.3g tol-units)%s%s\n", r.pass ? "PASS" : "FAIL", r.id,
                        r.name.c_str(), r.max_err, r.note.empty() ? "" : " - ", r.note.c_str());
            all_pass = all_pass && r.pass;
        }
    }
    return all_pass ? 0 : 1;
}
