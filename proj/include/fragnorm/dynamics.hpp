// Exactly area-preserving primitive maps of the punctured plane — radial
// rotation profiles (tube twists, Hamiltonian shears, ball maps) plus the
// measure-preserving first-return pieces used by constructive fragmentation
// — together with compositions, canonical-isotopy trajectories, and support
// accounting.
#pragma once

#include "fragnorm/geometry.hpp"
#include "fragnorm/plane.hpp"

#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace fragnorm {

// ---- profile ingredients ------------------------------------------------

// C-infinity monotone step: 0 for u <= 0, 1 for u >= 1.
double smoothstep(double u);

// bell(y) = exp(-1/(1-y^2)) on (-1,1), zero outside.
double bell(double y);

// bell_shear(y) = bell(y) + y * bell'(y), the angular speed profile of the
// shear generated by H(y) = y*bell(y). Positive exactly on (-y0, y0) with
// y0 = sqrt(2 - sqrt(3)).
double bell_shear(double y);

// Root of bell_shear on (0,1) by bisection, within `tolerance` of the
// closed-form sqrt(2 - sqrt(3)).
double y0_solve(double tolerance);

// Closed-form root, used for exact support accounting.
inline double y0_exact() { return std::sqrt(2.0 - std::sqrt(3.0)); }

// ---- primitive maps -----------------------------------------------------
// All primitives act as (r, theta) -> (r, theta + omega(r)) in polar
// coordinates about their center, which preserves area exactly.

// Twist supported in the annulus (r_inner, r_outer): rotates by the full
// 2*pi*turns on the core band [core_lo, core_hi] and ramps smoothly to zero
// at both annulus edges.
struct TubeTwist {
    Vec2 center;
    double r_inner = 0.0, r_outer = 0.0;
    double core_lo = 0.0, core_hi = 0.0;
    int turns = 1;

    double angle_at(double r) const;
    void validate() const; // throws std::invalid_argument on bad geometry
};

// Angular shear of the tube r = mid_radius + half_width * y, y in [-1,1],
// generated by H(y) = y*bell(y): angular advance strength * bell_shear(y),
// restricted to |y| < y0 (where it is positive) and zero outside.
struct HamiltonianShear {
    Vec2 center;
    double mid_radius = 0.0;
    double half_width = 0.0;
    double strength = 1.0;

    double angle_at(double r) const;
    void validate() const;
};

// Rotation supported in a disc of measure at most one: full max_angle
// rotation inside radius/2, smoothly decaying to zero at the boundary.
struct BallMap {
    Vec2 center;
    double radius = 0.0;
    double max_angle = 0.0;

    double angle_at(double rho) const;
    void validate() const;
};

// ---- fragmentation scheme data -------------------------------------------
// fragment_tube_twist (see fragment.hpp) splits a twist into radial windows
// and per-window rotation steps; each step R factors as R = u ∘ v where u is
// the first-return map of R to the complement of a fixed angular sector
// (supported in a C-shaped annular sector — a topological disc) and
// v = u^{-1} ∘ R carries the sector flux (supported in a slightly widened
// sector). The shared scheme holds the window/step bookkeeping.
struct FragScheme;

// First-return piece: window `window` of the scheme, supported in the
// C-shaped complement of the excluded sector.
struct ReturnMap {
    std::shared_ptr<const FragScheme> scheme;
    int window = 0;
};

// Sector-flux piece: v = u^{-1} ∘ R for the same window, supported in the
// excluded sector widened by one step angle.
struct SectorCarry {
    std::shared_ptr<const FragScheme> scheme;
    int window = 0;
};

struct FragScheme {
    TubeTwist twist;     // target twist with turns = |original turns| >= 1
    double sector_hi;    // ccw edge angle of the excluded sector
    double sector_width; // angular width w of the excluded sector
    int steps;           // rotation steps m per window

    struct Window {
        double support_lo, support_hi; // chi_i support bounds in r
        double core_lo, core_hi;       // plateau band
        double step_max;               // max_r of the per-step angle in this window
    };
    std::vector<Window> windows;
    double overlap = 0.0; // ramp width shared by adjacent windows

    // Angular sector coordinate: u in [0, 2*pi), with the excluded sector
    // occupying [2*pi - w, 2*pi).
    double sector_coord(Vec2 p) const;
    bool in_sector(Vec2 p) const;

    double chi(int window, double r) const;        // partition of unity value
    double step_angle(int window, double r) const; // twist angle * chi / steps, >= 0
};

// ---- compositions ---------------------------------------------------------

using Primitive = std::variant<TubeTwist, HamiltonianShear, BallMap, ReturnMap, SectorCarry>;

Vec2 primitive_evaluate(const Primitive& p, Vec2 x, int exponent);

struct Factor {
    Primitive prim;
    int exponent = 1; // +1 or -1
};

// Ordered composition f = F_0 ∘ F_1 ∘ ... ∘ F_{n-1}: the rightmost (last)
// factor is applied first. Immutable.
class MapWord {
public:
    MapWord() = default;
    explicit MapWord(std::vector<Factor> factors);
    static MapWord single(Primitive p, int exponent = 1);

    const std::vector<Factor>& factors() const { return factors_; }
    size_t size() const { return factors_.size(); }
    bool empty() const { return factors_.empty(); }

    Vec2 evaluate(Vec2 x) const;
    MapWord inverse() const;
    MapWord powered(int k) const;

private:
    std::vector<Factor> factors_;
};

// outer ∘ inner: apply `inner` first.
MapWord compose(const MapWord& outer, const MapWord& inner);

// ---- canonical isotopy ----------------------------------------------------

// Polyline trace of x under the canonical per-factor isotopy of f (each
// factor's profile scaled by s in [0,1], factors concatenated rightmost
// first). Segments subtend at most `base_step` at the factor center and at
// most pi/4 at every puncture of M (adaptive bisection). The final vertex is
// exactly evaluate(f, x).
Polyline trajectory(const PuncturedPlane& M, const MapWord& f, Vec2 x,
                    double base_step = std::numbers::pi / 8.0);

// ---- support accounting ----------------------------------------------------

struct DiscRegion {
    Vec2 center;
    double radius;
};
struct AnnulusRegion {
    Vec2 center;
    double r_inner, r_outer;
};
// Annular sector sweeping `width` radians counterclockwise from start_angle.
struct SectorRegion {
    Vec2 center;
    double r_inner, r_outer;
    double start_angle, width;
};
using Region = std::variant<DiscRegion, AnnulusRegion, SectorRegion>;

double region_area(const Region& region);
bool region_contains(const Region& region, Vec2 p);
Box region_bbox(const Region& region);
Region primitive_support(const Primitive& p);
std::string primitive_name(const Primitive& p);

struct MeasureBound {
    double value = 0.0;
    bool exact = true; // false: `value` is only an upper bound (sum)
};

// Measure of the union of factor supports: exact for same-center stacks and
// pairwise-disjoint groups (plus the two-disc lens case), otherwise the sum
// of areas flagged as an upper bound.
MeasureBound support_measure_bound(const MapWord& f);

Box support_bbox(const MapWord& f);
bool in_any_support(const MapWord& f, Vec2 p);

// Max over sampled points in `region` of |det(numerical Jacobian) - 1|,
// central differences with step 1e-6. Samples are deterministic in `seed`.
double area_defect(const MapWord& f, const Box& region, int n_samples,
                   uint64_t seed = 1);

// ---- push-map construction --------------------------------------------------

// Builds a twist around the centroid of the enclosed punctures whose core
// circle represents (a conjugate of) the product of the enclosed generators:
// support measure exactly area_budget, core band occupying core_fraction of
// it. Throws if any excluded puncture or the basepoint is inside the annulus
// or if the enclosed punctures cannot fit inside the inner radius.
TubeTwist make_push_map(const PuncturedPlane& M, const std::vector<int>& enclosed,
                        double area_budget, double core_fraction, int turns = 1);

} // namespace fragnorm
