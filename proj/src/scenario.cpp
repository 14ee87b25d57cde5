#include "fragnorm/scenario.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

namespace fragnorm {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& message) {
    throw std::runtime_error(message);
}

// ---- formatting -------------------------------------------------------------

std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// ---- strict JSON access -----------------------------------------------------

void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) fail(where + " must be a JSON object");
}

// Every key must be listed; every key in `required` must be present.
void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> required,
                std::initializer_list<const char*> optional) {
    require_object(obj, where);
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* k : required)
            if (item.key() == k) known = true;
        for (const char* k : optional)
            if (item.key() == k) known = true;
        if (!known) fail("unknown key '" + item.key() + "' in " + where);
    }
    for (const char* k : required)
        if (!obj.contains(k)) fail(where + " is missing required key '" + k + "'");
}

double as_double(const json& obj, const char* key, const std::string& where) {
    const json& v = obj.at(key);
    if (!v.is_number()) fail(where + "." + key + " must be a number");
    return v.get<double>();
}

double opt_double(const json& obj, const char* key, const std::string& where,
                  double fallback) {
    return obj.contains(key) ? as_double(obj, key, where) : fallback;
}

long as_long(const json& obj, const char* key, const std::string& where) {
    const json& v = obj.at(key);
    if (!v.is_number_integer()) fail(where + "." + key + " must be an integer");
    return v.get<long>();
}

long opt_long(const json& obj, const char* key, const std::string& where,
              long fallback) {
    return obj.contains(key) ? as_long(obj, key, where) : fallback;
}

bool opt_bool(const json& obj, const char* key, const std::string& where,
              bool fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean()) fail(where + "." + key + " must be a boolean");
    return v.get<bool>();
}

std::string as_string(const json& obj, const char* key, const std::string& where) {
    const json& v = obj.at(key);
    if (!v.is_string()) fail(where + "." + key + " must be a string");
    return v.get<std::string>();
}

Vec2 as_vec2(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        fail(where + " must be an array of two numbers");
    return Vec2{v[0].get<double>(), v[1].get<double>()};
}

std::vector<Vec2> as_vec2_list(const json& v, const std::string& where) {
    if (!v.is_array()) fail(where + " must be an array of [x, y] points");
    std::vector<Vec2> out;
    for (size_t i = 0; i < v.size(); ++i)
        out.push_back(as_vec2(v[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

// ---- section parsers --------------------------------------------------------

ScenarioKind parse_kind(const std::string& s) {
    if (s == "hamiltonian-profile") return ScenarioKind::hamiltonian_profile;
    if (s == "push-value") return ScenarioKind::push_value;
    if (s == "defect-audit") return ScenarioKind::defect_audit;
    if (s == "stable-norm") return ScenarioKind::stable_norm;
    if (s == "essential-claim") return ScenarioKind::essential_claim;
    if (s == "fragment-verify") return ScenarioKind::fragment_verify;
    fail("unknown scenario kind '" + s + "'");
}

PlaneSpec parse_plane(const json& j) {
    check_keys(j, "plane", {"punctures", "basepoint"}, {"ray_directions"});
    PlaneSpec out;
    out.punctures = as_vec2_list(j.at("punctures"), "plane.punctures");
    out.basepoint = as_vec2(j.at("basepoint"), "plane.basepoint");
    if (j.contains("ray_directions"))
        out.ray_directions = as_vec2_list(j.at("ray_directions"), "plane.ray_directions");
    return out;
}

PsiSpec parse_psi(const json& j) {
    check_keys(j, "psi", {"pattern"}, {"defect_bound"});
    PsiSpec out;
    out.pattern = as_string(j, "pattern", "psi");
    out.defect_bound = opt_double(j, "defect_bound", "psi", 0.0);
    return out;
}

// Symmetric core band: the middle `fraction` of the support measure in r^2.
void apply_core_fraction(TubeTwist& t, double fraction, const std::string& where) {
    if (!(fraction > 0.0 && fraction < 1.0))
        fail(where + ".core_fraction must lie in (0, 1)");
    const double lo2 = t.r_inner * t.r_inner;
    const double hi2 = t.r_outer * t.r_outer;
    const double mid2 = 0.5 * (lo2 + hi2);
    const double half2 = 0.5 * fraction * (hi2 - lo2);
    t.core_lo = std::sqrt(mid2 - half2);
    t.core_hi = std::sqrt(mid2 + half2);
}

Factor parse_factor(const json& j, const PuncturedPlane& M, const std::string& where) {
    require_object(j, where);
    const std::string type = as_string(j, "type", where);
    Factor out;
    long e = opt_long(j, "exponent", where, 1);
    if (e != 1 && e != -1) fail(where + ".exponent must be 1 or -1");
    out.exponent = int(e);

    if (type == "tube_twist") {
        check_keys(j, where, {"type", "center", "r_inner", "r_outer", "turns"},
                   {"core_lo", "core_hi", "core_fraction", "exponent"});
        TubeTwist t;
        t.center = as_vec2(j.at("center"), where + ".center");
        t.r_inner = as_double(j, "r_inner", where);
        t.r_outer = as_double(j, "r_outer", where);
        t.turns = as_double(j, "turns", where);
        const bool explicit_core = j.contains("core_lo") || j.contains("core_hi");
        if (explicit_core == j.contains("core_fraction"))
            fail(where + " needs either core_lo/core_hi or core_fraction");
        if (explicit_core) {
            if (!(j.contains("core_lo") && j.contains("core_hi")))
                fail(where + " needs both core_lo and core_hi");
            t.core_lo = as_double(j, "core_lo", where);
            t.core_hi = as_double(j, "core_hi", where);
        } else {
            apply_core_fraction(t, as_double(j, "core_fraction", where), where);
        }
        t.validate();
        out.prim = t;
    } else if (type == "push_map") {
        check_keys(j, where,
                   {"type", "punctures", "area_budget_over_pi", "core_fraction", "turns"},
                   {"exponent"});
        const json& idx = j.at("punctures");
        if (!idx.is_array() || idx.empty())
            fail(where + ".punctures must be a nonempty array of indices");
        std::vector<int> enclosed;
        for (const json& v : idx) {
            if (!v.is_number_integer())
                fail(where + ".punctures entries must be integers");
            enclosed.push_back(v.get<int>());
        }
        const double budget =
            as_double(j, "area_budget_over_pi", where) * std::numbers::pi;
        out.prim = make_push_map(M, enclosed, budget,
                                 as_double(j, "core_fraction", where),
                                 as_double(j, "turns", where));
    } else if (type == "hamiltonian_shear") {
        check_keys(j, where, {"type", "center", "mid_radius", "half_width", "strength"},
                   {"exponent"});
        HamiltonianShear s;
        s.center = as_vec2(j.at("center"), where + ".center");
        s.mid_radius = as_double(j, "mid_radius", where);
        s.half_width = as_double(j, "half_width", where);
        s.strength = as_double(j, "strength", where);
        s.validate();
        out.prim = s;
    } else if (type == "ball_map") {
        check_keys(j, where, {"type", "center", "radius", "max_angle"}, {"exponent"});
        BallMap b;
        b.center = as_vec2(j.at("center"), where + ".center");
        b.radius = as_double(j, "radius", where);
        b.max_angle = as_double(j, "max_angle", where);
        b.validate();
        out.prim = b;
    } else {
        fail(where + ".type '" + type + "' is not a known primitive");
    }
    return out;
}

MapWord parse_map(const json& j, const PuncturedPlane& M, const std::string& where) {
    check_keys(j, where, {"factors"}, {});
    const json& fs = j.at("factors");
    if (!fs.is_array()) fail(where + ".factors must be an array");
    std::vector<Factor> factors;
    for (size_t i = 0; i < fs.size(); ++i)
        factors.push_back(
            parse_factor(fs[i], M, where + ".factors[" + std::to_string(i) + "]"));
    return MapWord(std::move(factors));
}

QuadratureSpec parse_quadrature(const json& j, bool& explicit_region) {
    check_keys(j, "quadrature", {},
               {"mode", "resolution", "samples", "seed", "threads", "hom_n",
                "use_raw_psi", "region"});
    QuadratureSpec q;
    if (j.contains("mode")) {
        const std::string m = as_string(j, "mode", "quadrature");
        if (m == "grid") q.mode = QuadratureSpec::Mode::grid;
        else if (m == "monte-carlo") q.mode = QuadratureSpec::Mode::monte_carlo;
        else fail("quadrature.mode must be 'grid' or 'monte-carlo'");
    }
    q.resolution = int(opt_long(j, "resolution", "quadrature", q.resolution));
    if (q.resolution < 1) fail("quadrature.resolution must be >= 1");
    q.samples = opt_long(j, "samples", "quadrature", q.samples);
    if (q.samples < 1) fail("quadrature.samples must be >= 1");
    if (j.contains("seed")) {
        const json& s = j.at("seed");
        if (!s.is_number_integer() || s.get<long long>() < 0)
            fail("quadrature.seed must be a nonnegative integer");
        q.seed = s.get<uint64_t>();
    }
    q.threads = int(opt_long(j, "threads", "quadrature", q.threads));
    if (q.threads < 1) fail("quadrature.threads must be >= 1");
    q.hom_n = opt_long(j, "hom_n", "quadrature", q.hom_n);
    if (q.hom_n < 1) fail("quadrature.hom_n must be >= 1");
    q.use_raw_psi = opt_bool(j, "use_raw_psi", "quadrature", false);
    explicit_region = j.contains("region");
    if (explicit_region) {
        const json& r = j.at("region");
        if (!r.is_array() || r.size() != 2)
            fail("quadrature.region must be [[lo.x, lo.y], [hi.x, hi.y]]");
        q.region.lo = as_vec2(r[0], "quadrature.region[0]");
        q.region.hi = as_vec2(r[1], "quadrature.region[1]");
        if (!(q.region.lo.x < q.region.hi.x && q.region.lo.y < q.region.hi.y))
            fail("quadrature.region must have positive extent");
    }
    return q;
}

ExperimentSpec parse_experiment(const json& j, ScenarioKind kind) {
    ExperimentSpec e;
    switch (kind) {
    case ScenarioKind::hamiltonian_profile:
        check_keys(j, "experiment", {}, {"tolerance", "sample_count"});
        e.tolerance = opt_double(j, "tolerance", "experiment", e.tolerance);
        if (!(e.tolerance > 0.0)) fail("experiment.tolerance must be positive");
        e.sample_count = int(opt_long(j, "sample_count", "experiment", e.sample_count));
        if (e.sample_count < 2) fail("experiment.sample_count must be >= 2");
        break;
    case ScenarioKind::push_value:
        check_keys(j, "experiment", {"map"}, {"export_trajectories"});
        e.map = as_string(j, "map", "experiment");
        if (j.contains("export_trajectories"))
            e.export_trajectories = as_vec2_list(j.at("export_trajectories"),
                                                 "experiment.export_trajectories");
        break;
    case ScenarioKind::defect_audit:
        check_keys(j, "experiment", {"left", "right"}, {});
        e.left = as_string(j, "left", "experiment");
        e.right = as_string(j, "right", "experiment");
        break;
    case ScenarioKind::stable_norm:
        check_keys(j, "experiment", {"map", "k_max"}, {});
        e.map = as_string(j, "map", "experiment");
        e.k_max = int(as_long(j, "k_max", "experiment"));
        if (e.k_max < 2) fail("experiment.k_max must be >= 2");
        break;
    case ScenarioKind::essential_claim:
        check_keys(j, "experiment", {"left", "right", "gap"},
                   {"peripheral_measure", "hom_k"});
        e.left = as_string(j, "left", "experiment");
        e.right = as_string(j, "right", "experiment");
        e.gap = as_double(j, "gap", "experiment");
        if (!(e.gap > 0.0)) fail("experiment.gap must be positive");
        e.peripheral_measure =
            opt_double(j, "peripheral_measure", "experiment", 0.0);
        if (e.peripheral_measure < 0.0)
            fail("experiment.peripheral_measure must be nonnegative");
        e.hom_k = int(opt_long(j, "hom_k", "experiment", e.hom_k));
        if (e.hom_k < 1) fail("experiment.hom_k must be >= 1");
        break;
    case ScenarioKind::fragment_verify:
        check_keys(j, "experiment", {"map"},
                   {"ball_budget", "sample_count", "sample_seed",
                    "check_piece_classes", "piece_k_max", "piece_resolution"});
        e.map = as_string(j, "map", "experiment");
        e.ball_budget = opt_double(j, "ball_budget", "experiment", e.ball_budget);
        if (!(e.ball_budget > 0.0)) fail("experiment.ball_budget must be positive");
        e.sample_count_frag =
            opt_long(j, "sample_count", "experiment", e.sample_count_frag);
        if (e.sample_count_frag < 1) fail("experiment.sample_count must be >= 1");
        if (j.contains("sample_seed")) {
            const json& s = j.at("sample_seed");
            if (!s.is_number_integer() || s.get<long long>() < 0)
                fail("experiment.sample_seed must be a nonnegative integer");
            e.sample_seed = s.get<uint64_t>();
        }
        e.check_piece_classes =
            opt_bool(j, "check_piece_classes", "experiment", false);
        e.piece_k_max = int(opt_long(j, "piece_k_max", "experiment", e.piece_k_max));
        if (e.piece_k_max < 1) fail("experiment.piece_k_max must be >= 1");
        e.piece_resolution =
            int(opt_long(j, "piece_resolution", "experiment", e.piece_resolution));
        if (e.piece_resolution < 1) fail("experiment.piece_resolution must be >= 1");
        break;
    }
    return e;
}

// ---- cross-reference validation ----------------------------------------------

PuncturedPlane build_plane(const PlaneSpec& ps) {
    if (ps.ray_directions.empty())
        return PuncturedPlane(ps.punctures, ps.basepoint);
    return PuncturedPlane(ps.punctures, ps.basepoint, ps.ray_directions);
}

const MapWord& resolve_map(const Scenario& sc, const std::string& name,
                           const char* role) {
    auto it = sc.maps.find(name);
    if (it == sc.maps.end())
        fail("experiment." + std::string(role) + " references unknown map '" +
             name + "'");
    return it->second;
}

CountingQuasimorphism build_psi(const Scenario& sc, const PuncturedPlane& M) {
    if (!sc.psi) fail("scenario kind requires a psi section");
    ReducedWord pattern = parse_word(sc.psi->pattern, M.rank());
    // parse_word widens the rank for out-of-range letters; here the pattern
    // must live in the group generated by this plane's punctures
    if (pattern.rank() != M.rank())
        fail("psi.pattern '" + sc.psi->pattern + "' references generator index " +
             std::to_string(pattern.rank()) + " but the plane has only " +
             std::to_string(M.rank()) + " punctures");
    return CountingQuasimorphism(pattern, sc.psi->defect_bound);
}

// The single tube-twist factor of a fragmentation target.
const TubeTwist& single_twist_factor(const MapWord& f, const char* role) {
    if (f.size() != 1)
        fail(std::string(role) + " must consist of exactly one tube-twist factor");
    const Factor& fac = f.factors().front();
    if (fac.exponent != 1)
        fail(std::string(role) +
             " must use exponent 1 (encode inversion via negative turns)");
    const TubeTwist* t = std::get_if<TubeTwist>(&fac.prim);
    if (t == nullptr)
        fail(std::string(role) + " must consist of exactly one tube-twist factor");
    return *t;
}

void validate_scenario(const Scenario& sc) {
    const bool needs_plane = sc.kind != ScenarioKind::hamiltonian_profile;
    if (needs_plane && !sc.plane)
        fail("scenario kind requires a plane section");

    std::vector<const MapWord*> used;
    switch (sc.kind) {
    case ScenarioKind::hamiltonian_profile:
        break;
    case ScenarioKind::push_value: {
        const MapWord& f = resolve_map(sc, sc.experiment.map, "map");
        single_twist_factor(f, "push-value map");
        used.push_back(&f);
        break;
    }
    case ScenarioKind::stable_norm:
        used.push_back(&resolve_map(sc, sc.experiment.map, "map"));
        break;
    case ScenarioKind::defect_audit:
    case ScenarioKind::essential_claim:
        used.push_back(&resolve_map(sc, sc.experiment.left, "left"));
        used.push_back(&resolve_map(sc, sc.experiment.right, "right"));
        break;
    case ScenarioKind::fragment_verify: {
        const MapWord& f = resolve_map(sc, sc.experiment.map, "map");
        single_twist_factor(f, "fragment-verify map");
        used.push_back(&f);
        break;
    }
    }

    if (needs_plane) {
        PuncturedPlane M = build_plane(*sc.plane);
        const bool needs_psi =
            sc.kind != ScenarioKind::fragment_verify ||
            sc.experiment.check_piece_classes;
        if (needs_psi) build_psi(sc, M); // throws on pattern/rank mismatch
    }

    if (sc.explicit_region) {
        for (const MapWord* f : used)
            if (!f->empty() && !sc.quadrature.region.contains(support_bbox(*f)))
                fail("quadrature.region does not cover the support of a "
                     "referenced map");
    }
}

// ---- CSV assembly -------------------------------------------------------------

class CsvBuilder {
public:
    CsvBuilder(const Scenario& sc, const QuadratureSpec& q) {
        head("scenario", sc.name);
        head("kind", to_string(sc.kind));
        head("schema_version", std::to_string(sc.schema_version));
        head("mode", q.mode == QuadratureSpec::Mode::grid ? "grid" : "monte-carlo");
        if (q.mode == QuadratureSpec::Mode::grid)
            head("resolution", std::to_string(q.resolution));
        else
            head("samples", std::to_string(q.samples));
        head("seed", std::to_string(q.seed));
        if (sc.psi) {
            head("psi_pattern", sc.psi->pattern);
        }
    }

    void head(const std::string& key, const std::string& value) {
        text_ += "# " + key + ": " + value + "\n";
    }
    void head(const std::string& key, double value) { head(key, fmt_g(value)); }

    void columns(const std::string& header_row) { text_ += header_row + "\n"; }

    void cell(const std::string& s) {
        if (!row_.empty()) row_ += ",";
        row_ += s;
    }
    void cell(double v) { cell(fmt_g(v)); }
    void cell(long v) { cell(std::to_string(v)); }
    void cell(int v) { cell(std::to_string(v)); }
    void cell(bool v) { cell(std::string(v ? "1" : "0")); }

    void end_row() {
        text_ += row_ + "\n";
        row_.clear();
    }

    const std::string& text() const { return text_; }

private:
    std::string text_;
    std::string row_;
};

std::string write_artifact(const std::string& out_dir, const std::string& filename,
                           const std::string& content) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    fs::path path = fs::path(out_dir) / filename;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail("cannot open output file " + path.string());
    out.write(content.data(), std::streamsize(content.size()));
    if (!out) fail("failed writing output file " + path.string());
    return path.string();
}

// ---- experiment runners --------------------------------------------------------

struct RunContext {
    const Scenario& sc;
    QuadratureSpec quad;        // overrides applied
    uint64_t sample_seed = 1;   // fragment-verify sampling seed (override-aware)
    const RunOverrides& ov;
    ScenarioResult result;
    std::ostringstream summary;

    void emit(const std::string& filename, const std::string& content) {
        result.files_written.push_back(write_artifact(ov.out_dir, filename, content));
        summary << "  wrote " << result.files_written.back() << "\n";
    }
};

void run_hamiltonian_profile(RunContext& cx) {
    const ExperimentSpec& e = cx.sc.experiment;
    const double y0 = y0_solve(e.tolerance);
    const double closed_form = std::sqrt(2.0 - std::sqrt(3.0));
    bool pass = std::abs(y0 - closed_form) <= e.tolerance;

    CsvBuilder csv(cx.sc, cx.quad);
    csv.head("zero_crossing", y0);
    csv.head("closed_form", closed_form);
    csv.head("tolerance", e.tolerance);
    csv.columns("y,profile,shear_response");
    const int n = e.sample_count;
    for (int i = 0; i < n; ++i) {
        const double y = -0.96 + 1.92 * double(i) / double(n - 1);
        const double response = bell_shear(y);
        // inside the zero crossing the angular response must stay positive
        if (std::abs(y) < y0 - 1e-9 && !(response > 0.0)) pass = false;
        csv.cell(y);
        csv.cell(bell(y));
        csv.cell(response);
        csv.end_row();
    }

    cx.summary << "  zero_crossing " << fmt_g(y0) << " vs closed form "
               << fmt_g(closed_form) << " (tolerance " << fmt_g(e.tolerance)
               << ")\n";
    cx.emit(cx.sc.output, csv.text());
    cx.result.pass = pass;
}

void run_push_value(RunContext& cx) {
    PuncturedPlane M = build_plane(*cx.sc.plane);
    CountingQuasimorphism psi = build_psi(cx.sc, M);
    const MapWord& f = resolve_map(cx.sc, cx.sc.experiment.map, "map");
    const TubeTwist& t = single_twist_factor(f, "push-value map");

    QuadratureSpec q = cx.quad;
    if (!cx.sc.explicit_region) q.region = default_quadrature_region(f);
    PsiValue v = psi_integral(f, psi, M, q);

    const double support = annulus_area(t.r_inner, t.r_outer);
    const double core = annulus_area(t.core_lo, t.core_hi);
    const double peripheral = support - core;

    // class of a core point: one core orbit determines the expected value
    const Vec2 sample =
        t.center + Vec2{std::cos(0.3), std::sin(0.3)} * (0.5 * (t.core_lo + t.core_hi));
    ReducedWord core_class =
        M.loop_class(sample, trajectory(M, f, sample), f.evaluate(sample));
    const double core_value = homogenize(psi, core_class, q.hom_n).value;

    const double quad_err = v.statistical_error + v.homogenization_bias;
    const double bound = std::abs(core_value) * peripheral + 2.0 * quad_err;
    const double deviation = std::abs(v.value - core_value * core);
    const bool pass = deviation <= bound;

    CsvBuilder csv(cx.sc, q);
    csv.head("psi_defect_bound", psi.defect_bound());
    csv.head("core_class", core_class.str());
    csv.head("core_class_value", core_value);
    csv.head("bound_rule", "abs(value - core_class_value*core_measure) <= "
                           "abs(core_class_value)*peripheral_measure + 2*quad_error");
    csv.columns("value,quad_error,hom_bias,core_measure,peripheral_measure,"
                "core_class_value,deviation,bound,pass");
    csv.cell(v.value);
    csv.cell(v.statistical_error);
    csv.cell(v.homogenization_bias);
    csv.cell(core);
    csv.cell(peripheral);
    csv.cell(core_value);
    csv.cell(deviation);
    csv.cell(bound);
    csv.cell(pass);
    csv.end_row();
    cx.summary << "  value " << fmt_g(v.value) << " vs core contribution "
               << fmt_g(core_value * core) << ", deviation " << fmt_g(deviation)
               << " <= bound " << fmt_g(bound) << (pass ? " ok" : " VIOLATED")
               << "\n";
    cx.emit(cx.sc.output, csv.text());

    if (!cx.sc.experiment.export_trajectories.empty()) {
        CsvBuilder traj(cx.sc, q);
        traj.head("artifact", "isotopy trajectories of selected start points");
        traj.columns("sample,vertex,x,y");
        for (size_t i = 0; i < cx.sc.experiment.export_trajectories.size(); ++i) {
            Polyline line =
                trajectory(M, f, cx.sc.experiment.export_trajectories[i]);
            for (size_t k = 0; k < line.vertices.size(); ++k) {
                traj.cell(long(i));
                traj.cell(long(k));
                traj.cell(line.vertices[k].x);
                traj.cell(line.vertices[k].y);
                traj.end_row();
            }
        }
        std::string name = cx.sc.output;
        const size_t dot = name.rfind('.');
        name = (dot == std::string::npos ? name : name.substr(0, dot)) +
               "_trajectories.csv";
        cx.emit(name, traj.text());
    }
    cx.result.pass = pass;
}

void run_defect_audit(RunContext& cx) {
    PuncturedPlane M = build_plane(*cx.sc.plane);
    CountingQuasimorphism psi = build_psi(cx.sc, M);
    const MapWord& f = resolve_map(cx.sc, cx.sc.experiment.left, "left");
    const MapWord& g = resolve_map(cx.sc, cx.sc.experiment.right, "right");

    DefectAudit da = relative_defect_audit(f, g, psi, M, cx.quad);

    CsvBuilder csv(cx.sc, cx.quad);
    csv.head("psi_defect_bound", psi.defect_bound());
    csv.head("bound_rule",
             "delta_psi <= defect_bound*mu_overlap + 3*summed_quad_errors");
    csv.columns("delta_psi,mu_overlap,defect_bound,allowed,psi_fg,psi_f,psi_g,pass");
    csv.cell(da.delta_psi);
    csv.cell(da.mu_intersection);
    csv.cell(da.defect_bound);
    csv.cell(da.allowed);
    csv.cell(da.psi_fg.value);
    csv.cell(da.psi_f.value);
    csv.cell(da.psi_g.value);
    csv.cell(da.pass);
    csv.end_row();
    cx.summary << "  delta_psi " << fmt_g(da.delta_psi) << " <= allowed "
               << fmt_g(da.allowed) << " (mu_overlap " << fmt_g(da.mu_intersection)
               << ")" << (da.pass ? " ok" : " VIOLATED") << "\n";
    cx.emit(cx.sc.output, csv.text());
    cx.result.pass = da.pass;
}

void run_stable_norm(RunContext& cx) {
    PuncturedPlane M = build_plane(*cx.sc.plane);
    CountingQuasimorphism psi = build_psi(cx.sc, M);
    const MapWord& f = resolve_map(cx.sc, cx.sc.experiment.map, "map");

    QuadratureSpec q = cx.quad;
    if (!cx.sc.explicit_region) q.region = default_quadrature_region(f);
    StableNormReport rep = stable_norm_report(f, psi, M, cx.sc.experiment.k_max, q);

    const double slope_tol = 0.10;
    bool pass = true;
    const double base = rep.rows.empty() ? 0.0 : rep.rows.front().lower;
    pass = pass && base > 0.0;
    for (const StableNormRow& row : rep.rows) {
        pass = pass && row.lower <= double(row.upper);
        // linear growth: every certified lower bound keeps pace with k
        pass = pass && row.lower >= 0.95 * double(row.k) * base;
    }
    pass = pass && std::abs(rep.fitted_slope - rep.homogenized_rate) <=
                       slope_tol * rep.homogenized_rate;

    CsvBuilder csv(cx.sc, q);
    csv.head("psi_defect_bound", psi.defect_bound());
    csv.head("upper_per_power", std::to_string(rep.upper_per_power));
    csv.head("fitted_slope", rep.fitted_slope);
    csv.head("homogenized_rate", rep.homogenized_rate);
    csv.head("slope_tolerance_fraction", slope_tol);
    csv.columns("k,psi_value,quad_error,lower,upper");
    for (const StableNormRow& row : rep.rows) {
        csv.cell(row.k);
        csv.cell(row.psi_value);
        csv.cell(row.quad_error);
        csv.cell(row.lower);
        csv.cell(row.upper);
        csv.end_row();
    }
    cx.summary << "  fitted_slope " << fmt_g(rep.fitted_slope)
               << " vs homogenized_rate " << fmt_g(rep.homogenized_rate)
               << ", upper_per_power " << rep.upper_per_power << "\n";
    cx.emit(cx.sc.output, csv.text());
    cx.result.pass = pass;
}

void run_essential_claim(RunContext& cx) {
    PuncturedPlane M = build_plane(*cx.sc.plane);
    CountingQuasimorphism psi = build_psi(cx.sc, M);
    const ExperimentSpec& e = cx.sc.experiment;
    const MapWord& fa = resolve_map(cx.sc, e.left, "left");
    const MapWord& fb = resolve_map(cx.sc, e.right, "right");

    EssentialClaimReport ec = essential_claim_check(
        fa, fb, psi, M, cx.quad, e.gap, e.peripheral_measure, e.hom_k);

    CsvBuilder csv(cx.sc, cx.quad);
    csv.head("psi_defect_bound", psi.defect_bound());
    csv.head("gap", e.gap);
    csv.head("peripheral_measure", e.peripheral_measure);
    csv.head("hom_k", std::to_string(e.hom_k));
    csv.head("floor_rule", "floor = gap*mu_overlap - delta_hat must be positive "
                           "and combination + errors must reach it");
    csv.columns("combination,gap,mu_overlap,delta_hat,floor,margin,pass");
    csv.cell(ec.combination);
    csv.cell(ec.gap);
    csv.cell(ec.mu_overlap);
    csv.cell(ec.delta_hat);
    csv.cell(ec.floor_value);
    csv.cell(ec.margin);
    csv.cell(ec.pass);
    csv.end_row();
    cx.summary << "  combination " << fmt_g(ec.combination) << ", floor "
               << fmt_g(ec.floor_value) << ", margin " << fmt_g(ec.margin)
               << (ec.pass ? " ok" : " VIOLATED") << "\n";
    cx.emit(cx.sc.output, csv.text());
    cx.result.pass = ec.pass;
}

void run_fragment_verify(RunContext& cx) {
    PuncturedPlane M = build_plane(*cx.sc.plane);
    const ExperimentSpec& e = cx.sc.experiment;
    const MapWord& f = resolve_map(cx.sc, e.map, "map");
    const TubeTwist& t = single_twist_factor(f, "fragment-verify map");

    FragmentOptions opt;
    opt.ball_budget = e.ball_budget;
    Fragmentation frag = fragment_tube_twist(t, opt);
    const double sup_error =
        fragmentation_sup_error(frag, t, e.sample_count_frag, cx.sample_seed);
    const double sup_tolerance = 1e-9;
    const double max_measure = frag.max_piece_measure();

    bool pass = sup_error <= sup_tolerance &&
                max_measure <= e.ball_budget + 1e-12;

    std::optional<CountingQuasimorphism> psi;
    if (e.check_piece_classes) psi.emplace(build_psi(cx.sc, M));

    CsvBuilder csv(cx.sc, cx.quad);
    csv.head("piece_count", std::to_string(frag.piece_count()));
    csv.head("ball_budget", e.ball_budget);
    csv.head("max_piece_measure", max_measure);
    csv.head("sup_error", sup_error);
    csv.head("sup_tolerance", sup_tolerance);
    csv.head("sample_count", std::to_string(e.sample_count_frag));
    csv.head("sample_seed", std::to_string(cx.sample_seed));
    if (e.check_piece_classes) {
        csv.head("piece_k_max", std::to_string(e.piece_k_max));
        csv.head("piece_resolution", std::to_string(e.piece_resolution));
        csv.head("vanish_rule", "abs(hom_value) <= 2*hom_error for every piece");
        csv.columns("piece,label,measure,hom_value,hom_error,vanish_pass");
    } else {
        csv.columns("piece,label,measure");
    }

    for (size_t i = 0; i < frag.pieces.size(); ++i) {
        const FragPiece& p = frag.pieces[i];
        csv.cell(long(i));
        csv.cell(p.label);
        csv.cell(p.measure);
        if (e.check_piece_classes) {
            QuadratureSpec q = cx.quad;
            q.resolution = e.piece_resolution;
            q.region = default_quadrature_region(p.map);
            HomogenizedPsi hp = homogenized_psi(p.map, *psi, M, e.piece_k_max, q);
            const double err =
                hp.value.statistical_error + hp.value.homogenization_bias;
            const bool vanish = std::abs(hp.value.value) <= 2.0 * err;
            pass = pass && vanish;
            csv.cell(hp.value.value);
            csv.cell(err);
            csv.cell(vanish);
        }
        csv.end_row();
    }

    cx.summary << "  " << frag.piece_count() << " pieces, sup_error "
               << fmt_g(sup_error) << " (tolerance " << fmt_g(sup_tolerance)
               << "), max piece measure " << fmt_g(max_measure) << "\n";
    if (e.check_piece_classes)
        cx.summary << "  per-piece homogenized values checked at k="
                   << e.piece_k_max << "\n";
    cx.emit(cx.sc.output, csv.text());
    cx.result.pass = pass;
}

} // namespace

const char* to_string(ScenarioKind kind) {
    switch (kind) {
    case ScenarioKind::hamiltonian_profile: return "hamiltonian-profile";
    case ScenarioKind::push_value: return "push-value";
    case ScenarioKind::defect_audit: return "defect-audit";
    case ScenarioKind::stable_norm: return "stable-norm";
    case ScenarioKind::essential_claim: return "essential-claim";
    case ScenarioKind::fragment_verify: return "fragment-verify";
    }
    return "unknown";
}

Scenario parse_scenario(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& err) {
        fail(std::string("scenario is not valid JSON: ") + err.what());
    }
    check_keys(doc, "scenario",
               {"schema_version", "name", "kind", "experiment", "output"},
               {"plane", "psi", "maps", "quadrature"});

    Scenario sc;
    const long version = as_long(doc, "schema_version", "scenario");
    if (version != 1)
        fail("unsupported schema_version " + std::to_string(version) +
             " (this build understands version 1)");
    sc.schema_version = int(version);
    sc.name = as_string(doc, "name", "scenario");
    if (sc.name.empty()) fail("scenario.name must not be empty");
    sc.kind = parse_kind(as_string(doc, "kind", "scenario"));
    sc.output = as_string(doc, "output", "scenario");
    if (sc.output.empty()) fail("scenario.output must not be empty");

    if (doc.contains("plane")) sc.plane = parse_plane(doc.at("plane"));
    if (doc.contains("psi")) sc.psi = parse_psi(doc.at("psi"));
    if (doc.contains("quadrature"))
        sc.quadrature = parse_quadrature(doc.at("quadrature"), sc.explicit_region);

    if (doc.contains("maps")) {
        const json& maps = doc.at("maps");
        require_object(maps, "maps");
        if (!sc.plane) fail("maps require a plane section");
        PuncturedPlane M = build_plane(*sc.plane);
        for (const auto& item : maps.items())
            sc.maps.emplace(item.key(),
                            parse_map(item.value(), M, "maps." + item.key()));
    }

    sc.experiment = parse_experiment(doc.at("experiment"), sc.kind);
    validate_scenario(sc);
    return sc;
}

ScenarioResult run_scenario(const Scenario& sc, const RunOverrides& ov) {
    RunContext cx{sc, sc.quadrature, sc.experiment.sample_seed, ov, {}, {}};
    if (ov.seed) {
        cx.quad.seed = *ov.seed;
        cx.sample_seed = *ov.seed;
    }
    if (ov.threads) {
        if (*ov.threads < 1) fail("threads override must be >= 1");
        cx.quad.threads = *ov.threads;
    }
    if (ov.resolution) {
        if (*ov.resolution < 1) fail("resolution override must be >= 1");
        cx.quad.resolution = *ov.resolution;
    }

    cx.summary << "scenario " << sc.name << " (kind " << to_string(sc.kind)
               << ")\n";

    switch (sc.kind) {
    case ScenarioKind::hamiltonian_profile: run_hamiltonian_profile(cx); break;
    case ScenarioKind::push_value: run_push_value(cx); break;
    case ScenarioKind::defect_audit: run_defect_audit(cx); break;
    case ScenarioKind::stable_norm: run_stable_norm(cx); break;
    case ScenarioKind::essential_claim: run_essential_claim(cx); break;
    case ScenarioKind::fragment_verify: run_fragment_verify(cx); break;
    }

    cx.summary << "  verdict " << (cx.result.pass ? "PASS" : "FAIL") << "\n";
    cx.result.summary = cx.summary.str();
    return cx.result;
}

// ---- bundled catalog -----------------------------------------------------------

namespace {

constexpr const char* kHamiltonianProfile = R"json({
  "schema_version": 1,
  "name": "hamiltonian-profile",
  "kind": "hamiltonian-profile",
  "experiment": { "tolerance": 1e-10, "sample_count": 33 },
  "output": "hamiltonian_profile.csv"
})json";

constexpr const char* kPushValue = R"json({
  "schema_version": 1,
  "name": "push-value",
  "kind": "push-value",
  "plane": {
    "punctures": [[0.0, 0.0], [2.5, 0.0]],
    "basepoint": [0.31, -7.03]
  },
  "psi": { "pattern": "a", "defect_bound": 1.0 },
  "maps": {
    "f": {
      "factors": [
        { "type": "push_map", "punctures": [0], "area_budget_over_pi": 3.0,
          "core_fraction": 0.99, "turns": 1 }
      ]
    }
  },
  "quadrature": { "mode": "grid", "resolution": 512, "seed": 1, "threads": 8 },
  "experiment": {
    "map": "f",
    "export_trajectories": [[1.44, 0.33], [1.0, 0.1], [2.4, -1.1]]
  },
  "output": "push_value.csv"
})json";

constexpr const char* kDefectAudit = R"json({
  "schema_version": 1,
  "name": "defect-audit",
  "kind": "defect-audit",
  "plane": {
    "punctures": [[0.0, 0.0], [2.5, 0.0]],
    "basepoint": [0.31, -7.03]
  },
  "psi": { "pattern": "ab" },
  "maps": {
    "f": {
      "factors": [
        { "type": "tube_twist", "center": [0.0, 0.0], "r_inner": 1.0,
          "r_outer": 1.55, "core_fraction": 0.99, "turns": 1 }
      ]
    },
    "g": {
      "factors": [
        { "type": "tube_twist", "center": [2.5, 0.0], "r_inner": 1.0,
          "r_outer": 1.55, "core_fraction": 0.99, "turns": 1 }
      ]
    }
  },
  "quadrature": { "mode": "grid", "resolution": 512, "seed": 1, "threads": 8 },
  "experiment": { "left": "f", "right": "g" },
  "output": "defect_audit.csv"
})json";

constexpr const char* kStableNorm = R"json({
  "schema_version": 1,
  "name": "two-puncture-stable-norm",
  "kind": "stable-norm",
  "plane": {
    "punctures": [[0.0, 0.0], [2.5, 0.0]],
    "basepoint": [0.31, -7.03]
  },
  "psi": { "pattern": "a", "defect_bound": 1.0 },
  "maps": {
    "f": {
      "factors": [
        { "type": "push_map", "punctures": [0], "area_budget_over_pi": 3.0,
          "core_fraction": 0.99, "turns": 1 }
      ]
    }
  },
  "quadrature": { "mode": "grid", "resolution": 512, "seed": 1, "threads": 8 },
  "experiment": { "map": "f", "k_max": 20 },
  "output": "stable_norm.csv"
})json";

constexpr const char* kEssentialClaim = R"json({
  "schema_version": 1,
  "name": "essential-claim",
  "kind": "essential-claim",
  "plane": {
    "punctures": [[0.0, 0.0], [2.5, 0.0]],
    "basepoint": [0.31, -7.03]
  },
  "psi": { "pattern": "ab" },
  "maps": {
    "fa": {
      "factors": [
        { "type": "tube_twist", "center": [0.0, 0.0], "r_inner": 1.0,
          "r_outer": 1.55, "core_fraction": 0.99, "turns": 1 }
      ]
    },
    "fb": {
      "factors": [
        { "type": "tube_twist", "center": [2.5, 0.0], "r_inner": 1.0,
          "r_outer": 1.55, "core_fraction": 0.99, "turns": 1 }
      ]
    }
  },
  "quadrature": { "mode": "grid", "resolution": 512, "samples": 400000,
                  "seed": 1, "threads": 8 },
  "experiment": { "left": "fa", "right": "fb", "gap": 1.0,
                  "peripheral_measure": 0.02, "hom_k": 4 },
  "output": "essential_claim.csv"
})json";

constexpr const char* kFragmentVerify = R"json({
  "schema_version": 1,
  "name": "fragment-verify",
  "kind": "fragment-verify",
  "plane": {
    "punctures": [[0.0, 0.0], [2.5, 0.0]],
    "basepoint": [0.31, -7.03]
  },
  "maps": {
    "f": {
      "factors": [
        { "type": "push_map", "punctures": [0], "area_budget_over_pi": 3.0,
          "core_fraction": 0.99, "turns": 1 }
      ]
    }
  },
  "experiment": { "map": "f", "ball_budget": 1.0, "sample_count": 10000,
                  "sample_seed": 1 },
  "output": "fragment_verify.csv"
})json";

constexpr const char* kGeneratorVanishing = R"json({
  "schema_version": 1,
  "name": "generator-vanishing",
  "kind": "fragment-verify",
  "plane": {
    "punctures": [[0.0, 0.0], [2.5, 0.0]],
    "basepoint": [0.31, -7.03]
  },
  "psi": { "pattern": "a", "defect_bound": 1.0 },
  "maps": {
    "f": {
      "factors": [
        { "type": "push_map", "punctures": [0], "area_budget_over_pi": 3.0,
          "core_fraction": 0.99, "turns": 1 }
      ]
    }
  },
  "quadrature": { "threads": 8 },
  "experiment": { "map": "f", "ball_budget": 1.0, "sample_count": 2000,
                  "sample_seed": 1, "check_piece_classes": true,
                  "piece_k_max": 8, "piece_resolution": 128 },
  "output": "generator_vanishing.csv"
})json";

} // namespace

const std::vector<BundledScenario>& bundled_scenarios() {
    static const std::vector<BundledScenario> catalog = {
        {"hamiltonian-profile",
         "shear-profile zero crossing and a sample table of the angular response",
         kHamiltonianProfile},
        {"push-value",
         "quasimorphism integral of the standard one-turn push map vs its core band",
         kPushValue},
        {"defect-audit",
         "relative-defect inequality for two overlapping single-turn twists",
         kDefectAudit},
        {"two-puncture-stable-norm",
         "certified lower/upper bound series for powers of the standard push map",
         kStableNorm},
        {"essential-claim",
         "overlap floor of the two-twist pair under the two-letter pattern",
         kEssentialClaim},
        {"fragment-verify",
         "fragmentation of the standard push map: composition and piece budgets",
         kFragmentVerify},
        {"generator-vanishing",
         "fragmentation pieces individually integrate to zero under the pattern",
         kGeneratorVanishing},
    };
    return catalog;
}

const BundledScenario* find_bundled(const std::string& name) {
    for (const BundledScenario& b : bundled_scenarios())
        if (name == b.name) return &b;
    return nullptr;
}

} // namespace fragnorm
