#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rcomp/analysis.hpp"
#include "rcomp/io.hpp"

namespace rcomp {

constexpr const char* kArtifactVersion = "0.1.0";

struct RunOptions {
    std::string out_dir = "out";
    int threads = 1;
    std::optional<std::uint64_t> seed;  // overrides the config seed
};

struct RunManifest {
    std::string name;
    std::string experiment;
    std::string config_hash;
    std::string status;
    std::vector<std::string> outputs;
    json to_json() const;
};

struct IdentityResult {
    std::string name;
    double max_residual = 0.0;
    std::size_t samples = 0;
    double tol = 1e-9;
    bool pass() const { return max_residual <= tol; }
};

// Operator-level identities checked pointwise through two independent evaluation paths.
std::vector<IdentityResult> identity_suite(std::size_t samples, std::uint64_t seed, int threads = 1);

// Validates and executes one experiment config, writing outputs under opts.out_dir.
RunManifest run_config(const json& config, const RunOptions& opts);

// Tree listing with dims, native parameters, map norms and collapse notes.
std::string describe(const Expr& e);

// Canned configs for criterion ids c1..c10; "all" expands to c1..c9.
std::vector<std::string> repro_ids();
std::vector<json> repro_configs(const std::string& id);
std::vector<RunManifest> run_repro(const std::string& id, const RunOptions& opts);

}  // namespace rcomp
