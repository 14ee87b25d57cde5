// Constructive fragmentation of a tube twist into pieces supported in
// topological discs of measure at most a given ball budget, by radial
// windows (partition of unity) and per-window first-return factorization.
#pragma once

#include "fragnorm/dynamics.hpp"

#include <memory>
#include <string>
#include <vector>

namespace fragnorm {

// One fragmentation piece: a single-factor map supported in a topological
// disc (C-shaped annular sector or widened sector) of measure `measure`.
struct FragPiece {
    MapWord map;
    Region support;
    double measure = 0.0;   // exact Lebesgue measure of the support region
    std::string label;      // e.g. "w3.s2.return"
};

// The full decomposition, pieces listed in application order (index 0 acts
// first). as_map_word() is the ordered composition; it reproduces the twist
// on the nose away from roundoff.
struct Fragmentation {
    std::vector<FragPiece> pieces;
    std::shared_ptr<const FragScheme> scheme; // null when pieces is empty

    MapWord as_map_word() const;
    size_t piece_count() const { return pieces.size(); }
    // Largest piece support measure (0 if empty).
    double max_piece_measure() const;
};

// Options controlling the decomposition geometry.
struct FragmentOptions {
    double ball_budget = 1.0;             // max measure of a piece support
    double sector_center = 1.5 * std::numbers::pi; // excluded sector midline angle
    double sector_width = std::numbers::pi / 4.0;  // angular width w
    double fill_fraction = 0.98;          // windows use at most this * budget
    int max_windows = 4096;               // q search cap
};

// Splits `twist` into first-return pieces. Throws std::invalid_argument if
// the twist is invalid or the budget is unattainable within max_windows.
// turns == 0 yields an empty decomposition.
Fragmentation fragment_tube_twist(const TubeTwist& twist,
                                  const FragmentOptions& options = {});

// Max over `n_samples` deterministic box samples (support bbox inflated by
// 10%) of |composition(x) - twist(x)|.
double fragmentation_sup_error(const Fragmentation& frag, const TubeTwist& twist,
                               int n_samples, uint64_t seed = 1);

} // namespace fragnorm
