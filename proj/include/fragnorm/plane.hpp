// The punctured-plane model: k punctures with disjoint cut rays, a
// basepoint, and the machinery that reads polyline paths into reduced words
// of the free fundamental group (one generator per puncture).
#pragma once

#include "fragnorm/geometry.hpp"
#include "fragnorm/words.hpp"

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

namespace fragnorm {

struct Polyline {
    std::vector<Vec2> vertices;

    Vec2 front() const { return vertices.front(); }
    Vec2 back() const { return vertices.back(); }
    bool empty() const { return vertices.empty(); }
    size_t size() const { return vertices.size(); }
};

// A path vertex landed exactly on a cut ray: degenerate crossing. Callers
// that can tolerate a perturbation retry via path_word_robust.
struct VertexOnRayError : std::runtime_error {
    VertexOnRayError(size_t vertex, int ray)
        : std::runtime_error("polyline vertex " + std::to_string(vertex) +
                             " lies on cut ray " + std::to_string(ray)),
          vertex_index(vertex), ray_index(ray) {}
    size_t vertex_index;
    int ray_index;
};

// A segment passes through (or a vertex equals) a puncture: the path is not
// a valid representative and no perturbation policy applies automatically.
struct PunctureHitError : std::runtime_error {
    PunctureHitError(size_t segment, int puncture)
        : std::runtime_error("polyline segment " + std::to_string(segment) +
                             " passes through puncture " + std::to_string(puncture)),
          segment_index(segment), puncture_index(puncture) {}
    size_t segment_index;
    int puncture_index;
};

class PuncturedPlane {
public:
    // Cut rays default to vertically downward from every puncture; that
    // requires no two punctures vertically aligned (construction throws and
    // asks for explicit directions instead of silently repairing). The
    // basepoint must differ from all punctures and lie on no ray.
    PuncturedPlane(std::vector<Vec2> punctures, Vec2 basepoint,
                   std::optional<std::vector<Vec2>> ray_directions = std::nullopt);

    int rank() const { return static_cast<int>(punctures_.size()); }
    const std::vector<Vec2>& punctures() const { return punctures_; }
    Vec2 puncture(int i) const { return punctures_.at(size_t(i)); }
    Vec2 basepoint() const { return basepoint_; }
    Vec2 ray_direction(int i) const { return ray_dirs_.at(size_t(i)); }

    // Length scale for all tolerances: diameter of the bounding box of
    // punctures and basepoint, floored at 1.
    double diameter() const { return diameter_; }
    double puncture_clearance() const { return 1e-6 * diameter_; }
    double nudge_epsilon() const { return 1e-9 * diameter_; }

    // Reads the freely reduced word of signed transversal ray crossings.
    // Crossing ray i west-to-east (for the default downward rays; in general
    // from the negative to the positive side of the ray direction) yields
    // generator +i, so one counterclockwise circuit of puncture i reads as
    // generator i. Strict: throws VertexOnRayError / PunctureHitError on
    // degenerate contact.
    ReducedWord path_word(const Polyline& path) const;

    // Same reading, but a vertex-on-ray degeneracy is resolved by nudging
    // the offending interior vertex by nudge_epsilon() along its segment
    // toward the following vertex and re-reading. Endpoint degeneracies are
    // precondition violations and still throw. `retries`, when non-null,
    // accumulates the number of nudges applied.
    ReducedWord path_word_robust(Polyline path, int* retries = nullptr) const;

    // Straight segment from the basepoint to x, with a deterministic
    // two-vertex detour (clearance 2δ, δ = puncture_clearance()) around any
    // puncture the segment approaches within δ. Detour side: opposite the
    // puncture's side of the segment; a puncture exactly on the segment
    // detours to the fixed positive side. Throws if x is a puncture.
    Polyline basepoint_path(Vec2 x) const;

    // The class [trajectory] read along basepoint-path(x) · trajectory ·
    // reversed basepoint-path(fx). Trajectory must start at x and end at fx
    // exactly. Uses the robust reading (interior nudges allowed).
    ReducedWord loop_class(Vec2 x, const Polyline& trajectory, Vec2 fx,
                           int* retries = nullptr) const;

private:
    std::vector<Vec2> punctures_;
    Vec2 basepoint_;
    std::vector<Vec2> ray_dirs_; // unit vectors
    double diameter_ = 1.0;
};

// Exact closed-form areas for the simple regions used in reports.
double lebesgue_measure_rect(const Box& b);
double lebesgue_measure_disc(double radius);
double lebesgue_measure_annulus(double r_inner, double r_outer);

} // namespace fragnorm
