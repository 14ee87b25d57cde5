// Numerical evaluation of the quasimorphism integral Psi(f) = ∫ psi([f_x]) dμ
// over punctured-plane maps, its map-level homogenization, relative-defect
// audits, certified fragmentation-norm bounds, and the essential-overlap
// check. Grid quadrature is deterministic and bit-stable across thread
// counts; Monte Carlo uses counter-based sampling keyed to a seed.
#pragma once

#include "fragnorm/dynamics.hpp"
#include "fragnorm/fragment.hpp"
#include "fragnorm/plane.hpp"
#include "fragnorm/words.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fragnorm {

struct QuadratureSpec {
    enum class Mode { grid, monte_carlo };
    Mode mode = Mode::grid;
    int resolution = 512;    // grid: resolution x resolution midpoint cells
    long samples = 200000;   // monte carlo sample count
    uint64_t seed = 1;       // monte carlo / intersection sampling seed
    Box region;              // must contain the union of factor supports
    int threads = 1;         // worker threads (results independent of count)
    bool use_raw_psi = false;  // integrate raw psi instead of homogenized
    int64_t hom_n = 1024;    // word-level homogenization power
};

// Suggested quadrature region: the union bounding box of factor supports,
// inflated by 1% of its diagonal (empty maps get a unit box).
Box default_quadrature_region(const MapWord& f);

struct PsiValue {
    double value = 0.0;
    // Quadrature error estimate: grid mode uses a total-variation bound on
    // cell-boundary jumps; monte carlo reports the standard error.
    double statistical_error = 0.0;
    // Bias bound from finite word-level homogenization: defect/hom_n times
    // the measure where the integrand was evaluated (0 when use_raw_psi).
    double homogenization_bias = 0.0;
    std::string discretization_note;
    long points_evaluated = 0; // integrand evaluations inside supports
    long nudge_retries = 0;    // robust-reader vertex nudges across all points
    double max_abs_integrand = 0.0; // largest |psihat| seen at any sample
};

// Quadrature of psihat(loop_class(x, trajectory(f, x), f(x))) over
// quad.region; the integrand is identically zero (and skipped) outside the
// union of factor supports. Throws std::invalid_argument if quad.region does
// not contain the support bounding box.
PsiValue psi_integral(const MapWord& f, const CountingQuasimorphism& psi,
                      const PuncturedPlane& M, const QuadratureSpec& quad);

struct HomogenizedPsi {
    PsiValue value;               // psi_integral(f^k_max) / k_max
    std::vector<double> sequence; // k -> Psi(f^k)/k for k = 1..k_max
};

// Map-level homogenization estimate at power k_max (>= 1).
HomogenizedPsi homogenized_psi(const MapWord& f, const CountingQuasimorphism& psi,
                               const PuncturedPlane& M, int k_max,
                               const QuadratureSpec& quad);

// Monte Carlo estimate of the measure of the intersection of the two maps'
// support unions, sampled over `region`.
double support_intersection_measure(const MapWord& f, const MapWord& g,
                                    const Box& region, long n_samples,
                                    uint64_t seed);

struct DefectAudit {
    double delta_psi = 0.0;        // |Psi(fg) - Psi(f) - Psi(g)|
    double mu_intersection = 0.0;  // estimated measure of overlap U
    double defect_bound = 0.0;     // configured defect bound of psi
    double allowed = 0.0;          // defect_bound * mu + 3 * summed quad errors
    bool pass = false;             // delta_psi <= allowed
    PsiValue psi_fg, psi_f, psi_g;
};

// Verifies the relative-defect chain |Psi(fg) - Psi(f) - Psi(g)| <=
// defect_bound * mu(U) + 3 * (summed quadrature errors).
DefectAudit relative_defect_audit(const MapWord& f, const MapWord& g,
                                  const CountingQuasimorphism& psi,
                                  const PuncturedPlane& M,
                                  const QuadratureSpec& quad);

// Certified piece count: tube twists via fragment_tube_twist with the given
// budget; ball maps and first-return pieces count one each when their
// support measure fits the budget. Throws for factors with no certified
// scheme (shears) or oversized pieces.
long frag_upper_bound(const MapWord& f, double ball_budget = 1.0);

// Certified conditional lower bound max(0, (|Psihat(f)| - error) / (3 * defect
// bound)), valid whenever the configured defect bound dominates the true
// defect. Uses homogenized_psi at k_max.
double frag_lower_bound(const MapWord& f, const CountingQuasimorphism& psi,
                        const PuncturedPlane& M, const QuadratureSpec& quad,
                        int k_max);

struct StableNormRow {
    int k = 0;
    double psi_value = 0.0;  // Psi(f^k)
    double quad_error = 0.0;
    double lower = 0.0;      // certified lower bound for ||f^k||
    long upper = 0;          // piece-count upper bound for ||f^k||
};

struct StableNormReport {
    std::vector<StableNormRow> rows;
    double fitted_slope = 0.0;      // least-squares slope of lower bounds
    double homogenized_rate = 0.0;  // |Psihat(f)| / (3 * defect bound)
    long upper_per_power = 0;       // N with upper_k = k * N
};

// Lower/upper bound series for k = 1..k_max demonstrating linear growth.
// Requires k_max >= 2.
StableNormReport stable_norm_report(const MapWord& f,
                                    const CountingQuasimorphism& psi,
                                    const PuncturedPlane& M, int k_max,
                                    const QuadratureSpec& quad);

struct EssentialClaimReport {
    bool degenerate = false;    // one side empty: combination trivially zero
    double combination = 0.0;   // |Psihat(fa) - Psihat(fa fb) + Psihat(fb)|
    double gap = 0.0;           // configured essentiality gap a
    double mu_overlap = 0.0;    // estimated support-intersection measure
    double delta_hat = 0.0;     // peripheral-band + quadrature error aggregate
    double floor_value = 0.0;   // gap * mu_overlap - delta_hat
    double margin = 0.0;        // min(floor_value, combination + errs - floor)
    bool pass = false;
};

// Checks the essential-overlap inequality: the quasimorphism combination
// |Psihat(fa) - Psihat(fa fb) + Psihat(fb)| must dominate
// gap * mu(supp ∩ supp) - delta_hat, and that floor must be positive.
// `peripheral_measure` is the caller-supplied measure of the two maps'
// non-core bands (absorbed into delta_hat together with quadrature errors
// scaled by the largest integrand magnitude seen). Throws if the supports
// do not overlap. hom_k is the map-level homogenization power.
EssentialClaimReport essential_claim_check(const MapWord& fa, const MapWord& fb,
                                           const CountingQuasimorphism& psi,
                                           const PuncturedPlane& M,
                                           const QuadratureSpec& quad,
                                           double gap, double peripheral_measure,
                                           int hom_k = 4);

} // namespace fragnorm
