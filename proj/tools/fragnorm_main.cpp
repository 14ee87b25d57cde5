// Command-line scenario runner: run / list-scenarios / validate.
// Exit codes: 0 success (and PASS verdicts), 1 FAIL verdict, 2 usage,
// parse, or validation errors.
#include "CLI11.hpp"

#include "fragnorm/scenario.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

// Bundled name first, then filesystem path.
std::string load_scenario_text(const std::string& ref) {
    if (const fragnorm::BundledScenario* b = fragnorm::find_bundled(ref))
        return b->json_text;
    std::ifstream in(ref, std::ios::binary);
    if (!in)
        throw std::runtime_error("'" + ref +
                                 "' is neither a bundled scenario name nor a "
                                 "readable file (see list-scenarios)");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fragmentation-norm experiment runner"};
    app.require_subcommand(1);

    std::string run_ref;
    fragnorm::RunOverrides overrides;
    std::optional<uint64_t> seed;
    std::optional<int> threads;
    std::optional<int> resolution;

    CLI::App* run = app.add_subcommand(
        "run", "execute a scenario (bundled name or JSON file) and write CSV");
    run->add_option("scenario", run_ref, "bundled scenario name or path to a JSON file")
        ->required();
    run->add_option("--seed", seed, "override quadrature and sampling seeds");
    run->add_option("--threads", threads, "override worker thread count");
    run->add_option("--resolution-override", resolution,
                    "override the grid resolution");
    run->add_option("--out-dir", overrides.out_dir,
                    "directory for CSV artifacts (default: current directory)");

    CLI::App* list = app.add_subcommand("list-scenarios",
                                        "print the bundled scenario catalog");
    std::string dump_name;
    list->add_option("--dump", dump_name,
                     "print the JSON text of one bundled scenario and exit");

    std::string validate_ref;
    CLI::App* validate = app.add_subcommand(
        "validate", "parse and validate a scenario without running it");
    validate->add_option("scenario", validate_ref,
                         "bundled scenario name or path to a JSON file")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) {
            overrides.seed = seed;
            overrides.threads = threads;
            overrides.resolution = resolution;
            fragnorm::Scenario sc;
            try {
                sc = fragnorm::parse_scenario(load_scenario_text(run_ref));
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << "\n";
                return 2;
            }
            fragnorm::ScenarioResult res = fragnorm::run_scenario(sc, overrides);
            std::cout << res.summary;
            return res.pass ? 0 : 1;
        }
        if (list->parsed()) {
            if (!dump_name.empty()) {
                const fragnorm::BundledScenario* b = fragnorm::find_bundled(dump_name);
                if (b == nullptr) {
                    std::cerr << "error: no bundled scenario named '" << dump_name
                              << "'\n";
                    return 2;
                }
                std::cout << b->json_text << "\n";
                return 0;
            }
            for (const fragnorm::BundledScenario& b : fragnorm::bundled_scenarios()) {
                fragnorm::Scenario sc = fragnorm::parse_scenario(b.json_text);
                std::printf("%-26s %-19s %s\n", b.name, to_string(sc.kind),
                            b.description);
            }
            return 0;
        }
        if (validate->parsed()) {
            try {
                fragnorm::Scenario sc =
                    fragnorm::parse_scenario(load_scenario_text(validate_ref));
                std::cout << "scenario " << sc.name << " (kind "
                          << to_string(sc.kind) << "): valid\n";
                return 0;
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << "\n";
                return 2;
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
