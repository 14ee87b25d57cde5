// Experiment scenarios: versioned JSON configuration (strict schema, unknown
// keys rejected), a bundled catalog of ready-to-run experiments, and a runner
// that produces deterministic CSV artifacts plus a plain-text summary with a
// PASS/FAIL verdict.
#pragma once

#include "fragnorm/calculus.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fragnorm {

enum class ScenarioKind {
    hamiltonian_profile, // shear-profile zero crossing and sample table
    push_value,          // quasimorphism integral of a push map vs core band
    defect_audit,        // |Psi(fg)-Psi(f)-Psi(g)| against the overlap bound
    stable_norm,         // lower/upper bound series for powers f^k
    essential_claim,     // overlap floor for a pair of twists
    fragment_verify,     // fragmentation soundness (and optional piece classes)
};

const char* to_string(ScenarioKind kind);

struct PlaneSpec {
    std::vector<Vec2> punctures;
    Vec2 basepoint{0.0, 0.0};
    std::vector<Vec2> ray_directions; // empty: default upward rays
};

struct PsiSpec {
    std::string pattern;
    double defect_bound = 0.0; // 0: conventional default for the pattern
};

struct ExperimentSpec {
    // map references (which fields are used depends on the scenario kind)
    std::string map;   // push-value / stable-norm / fragment-verify
    std::string left;  // defect-audit / essential-claim
    std::string right; // defect-audit / essential-claim

    double tolerance = 1e-10; // hamiltonian-profile: zero-crossing tolerance
    int sample_count = 33;    // hamiltonian-profile: table rows

    std::vector<Vec2> export_trajectories; // push-value: extra polyline CSV

    int k_max = 8; // stable-norm: largest power

    double gap = 0.0;                // essential-claim: quasimorphism gap a
    double peripheral_measure = 0.0; // essential-claim: non-core band bound
    int hom_k = 4;                   // essential-claim: homogenization power

    double ball_budget = 1.0;         // fragment-verify: per-piece measure cap
    long sample_count_frag = 10000;   // fragment-verify: sup-error samples
    uint64_t sample_seed = 1;         // fragment-verify: sampling seed
    bool check_piece_classes = false; // fragment-verify: per-piece vanishing
    int piece_k_max = 8;              // fragment-verify: piece power
    int piece_resolution = 128;       // fragment-verify: piece grid resolution
};

struct Scenario {
    int schema_version = 1;
    std::string name;
    ScenarioKind kind = ScenarioKind::hamiltonian_profile;

    std::optional<PlaneSpec> plane;
    std::optional<PsiSpec> psi;
    std::map<std::string, MapWord> maps; // constructed, validated primitives

    QuadratureSpec quadrature;
    bool explicit_region = false; // region supplied in the file

    ExperimentSpec experiment;
    std::string output; // CSV filename, relative to the out-dir
};

// Parses and fully validates a scenario document: schema version, strict
// keys, primitive construction, reference resolution, and (for explicit
// regions) support coverage. Throws std::runtime_error with a diagnostic
// message on any problem.
Scenario parse_scenario(const std::string& json_text);

struct BundledScenario {
    const char* name;
    const char* description;
    const char* json_text;
};

// Built-in experiments, stable order, unique names; each entry parses and
// validates.
const std::vector<BundledScenario>& bundled_scenarios();

// Returns the bundled entry with the given name, or nullptr.
const BundledScenario* find_bundled(const std::string& name);

struct RunOverrides {
    std::optional<uint64_t> seed;   // replaces quadrature + sampling seeds
    std::optional<int> threads;     // replaces quadrature worker count
    std::optional<int> resolution;  // replaces the grid resolution
    std::string out_dir = ".";      // directory for CSV artifacts
};

struct ScenarioResult {
    bool pass = false;
    std::vector<std::string> files_written; // paths of CSV artifacts
    std::string summary;                    // deterministic multi-line text
};

// Executes the experiment and writes its CSV artifacts into ov.out_dir
// (created if missing). Floating-point output uses 12 significant digits.
// Rerunning with identical configuration and seed reproduces every artifact
// byte for byte; grid-mode numbers are independent of the thread count.
ScenarioResult run_scenario(const Scenario& sc, const RunOverrides& ov);

} // namespace fragnorm
