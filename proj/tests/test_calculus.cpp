// Tests for the quasimorphism-integral calculus: quadrature against known
// push-map values, determinism across threads and seeds, homogenization
// behavior, relative-defect audits, and the certified norm bounds.
#include "doctest.h"

#include "fragnorm/calculus.hpp"
#include "oracles.hpp"

#include <cmath>
#include <numbers>

using namespace fragnorm;

namespace {

constexpr double kPi = std::numbers::pi;

PuncturedPlane standard_plane() {
    return PuncturedPlane({{0.0, 0.0}, {2.5, 0.0}}, {0.31, -7.03});
}

// Push map around the first puncture: support annulus 1 <= r <= 2 (measure
// 3*pi), core band 99% of the support measure, one full turn.
TubeTwist standard_twist(const PuncturedPlane& M) {
    return make_push_map(M, {0}, 3.0 * kPi, 0.99, 1);
}

// Small twist around the second puncture whose support (r <= 0.45) is
// disjoint from the standard twist's support (r <= 2 around the origin,
// centers 2.5 apart).
TubeTwist far_small_twist(const PuncturedPlane& M) {
    TubeTwist t;
    t.center = M.puncture(1);
    t.r_inner = 0.1;
    t.core_lo = 0.2;
    t.core_hi = 0.3;
    t.r_outer = 0.45;
    t.turns = 1;
    t.validate();
    return t;
}

// Twists of matching annular shape (1 <= r <= 1.55) around each puncture;
// with centers 2.5 apart the two annuli overlap in a lens of measure ~0.7.
std::pair<TubeTwist, TubeTwist> overlapping_pair(const PuncturedPlane& M) {
    const double area2 = 1.55 * 1.55 - 1.0;
    TubeTwist a;
    a.center = M.puncture(0);
    a.r_inner = 1.0;
    a.r_outer = 1.55;
    a.core_lo = std::sqrt(1.0 + 0.005 * area2);
    a.core_hi = std::sqrt(1.0 + 0.995 * area2);
    a.turns = 1;
    a.validate();
    TubeTwist b = a;
    b.center = M.puncture(1);
    b.validate();
    return {a, b};
}

// Ball map far below both punctures and away from the basepoint; every loop
// it produces is contractible in the punctured plane.
BallMap far_ball() { return BallMap{{0.0, -4.0}, 0.5, 1.2}; }

} // namespace

TEST_CASE("psi_integral: identity map is exactly zero") {
    PuncturedPlane M = standard_plane();
    CountingQuasimorphism psi(parse_word("ab", 2));
    QuadratureSpec q; // degenerate default region is fine for the empty word
    PsiValue v = psi_integral(MapWord{}, psi, M, q);
    CHECK(v.value == 0.0);
    CHECK(v.statistical_error == 0.0);
    CHECK(v.homogenization_bias == 0.0);
    CHECK(v.points_evaluated == 0);
    CHECK(v.discretization_note == "identity map: zero exactly");
}

TEST_CASE("psi_integral: ball map away from punctures integrates to exact zero") {
    PuncturedPlane M = standard_plane();
    MapWord f = MapWord::single(far_ball());
    CountingQuasimorphism psi(parse_word("a", 2), 1.0);
    QuadratureSpec q;
    q.resolution = 128;
    q.region = default_quadrature_region(f);

    PsiValue v = psi_integral(f, psi, M, q);
    // every trajectory loop is contained in a disc missing both punctures,
    // so every class is trivial and the integrand vanishes identically
    CHECK(v.value == 0.0);
    CHECK(v.statistical_error == 0.0);
    CHECK(v.max_abs_integrand == 0.0);
    CHECK(v.points_evaluated > 0);
    CHECK(v.nudge_retries == 0);

    q.mode = QuadratureSpec::Mode::monte_carlo;
    q.samples = 20000;
    PsiValue vm = psi_integral(f, psi, M, q);
    CHECK(vm.value == 0.0);
    CHECK(vm.statistical_error == 0.0);
}

TEST_CASE("psi_integral: push-map value sits in the core/peripheral band") {
    PuncturedPlane M = standard_plane();
    TubeTwist t = standard_twist(M);
    MapWord f = MapWord::single(t);
    CountingQuasimorphism psi_a(parse_word("a", 2), 1.0);

    QuadratureSpec q;
    q.resolution = 256;
    q.threads = 4;
    q.region = default_quadrature_region(f);
    PsiValue v = psi_integral(f, psi_a, M, q);

    const double core = annulus_area(t.core_lo, t.core_hi);
    const double peripheral = 3.0 * kPi - core;
    // the core contributes exactly psibar(a) * core; ramp annuli add a
    // sub-full-turn winding, so the total lands strictly inside the band
    CHECK(v.value > core);
    CHECK(v.value < core + peripheral);
    CHECK(std::abs(v.value - core) <= peripheral + 2.0 * v.statistical_error);

    CHECK(v.points_evaluated > 0);
    CHECK(v.max_abs_integrand == doctest::Approx(1.0).epsilon(1e-12));
    // bias bound: defect/hom_n times the evaluated measure (~3*pi / 1024)
    CHECK(v.homogenization_bias > 0.005);
    CHECK(v.homogenization_bias < 0.015);
    CHECK(v.discretization_note.find("grid 256x256 midpoint") == 0);

    // raw-psi mode: counts of "a" in a^m equal the homogenized value exactly,
    // so the integral matches bitwise while the bias term drops to zero
    QuadratureSpec qraw = q;
    qraw.use_raw_psi = true;
    PsiValue vraw = psi_integral(f, psi_a, M, qraw);
    CHECK(vraw.value == v.value);
    CHECK(vraw.homogenization_bias == 0.0);
}

TEST_CASE("psi_integral: grid value is bitwise identical across thread counts") {
    PuncturedPlane M = standard_plane();
    MapWord f = MapWord::single(standard_twist(M));
    CountingQuasimorphism psi_a(parse_word("a", 2), 1.0);

    QuadratureSpec q;
    q.resolution = 128;
    q.region = default_quadrature_region(f);

    q.threads = 1;
    PsiValue v1 = psi_integral(f, psi_a, M, q);
    q.threads = 4;
    PsiValue v4 = psi_integral(f, psi_a, M, q);
    q.threads = 8;
    PsiValue v8 = psi_integral(f, psi_a, M, q);

    CHECK(v1.value == v4.value);
    CHECK(v1.value == v8.value);
    CHECK(v1.statistical_error == v4.statistical_error);
    CHECK(v1.points_evaluated == v4.points_evaluated);
    CHECK(v1.nudge_retries == v4.nudge_retries);
}

TEST_CASE("psi_integral: refining the grid moves the value far less than the error bound") {
    PuncturedPlane M = standard_plane();
    MapWord f = MapWord::single(standard_twist(M));
    CountingQuasimorphism psi_a(parse_word("a", 2), 1.0);

    QuadratureSpec q;
    q.threads = 4;
    q.region = default_quadrature_region(f);

    q.resolution = 128;
    PsiValue coarse = psi_integral(f, psi_a, M, q);
    q.resolution = 256;
    PsiValue fine = psi_integral(f, psi_a, M, q);

    // the total-variation bound is deliberately conservative: actual
    // refinement drift is orders of magnitude below it
    CHECK(std::abs(coarse.value - fine.value) < coarse.statistical_error);
    CHECK(fine.statistical_error < coarse.statistical_error);
}

TEST_CASE("psi_integral: monte carlo agrees with grid and is seed-deterministic") {
    PuncturedPlane M = standard_plane();
    MapWord f = MapWord::single(standard_twist(M));
    CountingQuasimorphism psi_a(parse_word("a", 2), 1.0);

    QuadratureSpec qg;
    qg.resolution = 256;
    qg.threads = 4;
    qg.region = default_quadrature_region(f);
    PsiValue grid = psi_integral(f, psi_a, M, qg);

    QuadratureSpec qm = qg;
    qm.mode = QuadratureSpec::Mode::monte_carlo;
    qm.samples = 200000;
    qm.seed = 7;
    PsiValue mc1 = psi_integral(f, psi_a, M, qm);
    PsiValue mc2 = psi_integral(f, psi_a, M, qm);
    CHECK(mc1.value == mc2.value); // same seed, same estimate

    qm.seed = 8;
    PsiValue mc3 = psi_integral(f, psi_a, M, qm);
    CHECK(mc1.value != mc3.value); // fresh seed, fresh sample set

    CHECK(std::abs(mc1.value - grid.value) <=
          4.0 * mc1.statistical_error + grid.statistical_error);
    CHECK(mc1.discretization_note.find("monte-carlo 200000 samples, seed 7") == 0);
}

TEST_CASE("psi_integral: input validation") {
    PuncturedPlane M = standard_plane();
    MapWord f = MapWord::single(standard_twist(M));
    CountingQuasimorphism psi_a(parse_word("a", 2), 1.0);

    QuadratureSpec q;
    q.region = Box{{-1.0, -1.0}, {1.0, 1.0}}; // support reaches r = 2
    CHECK_THROWS_AS(psi_integral(f, psi_a, M, q), std::invalid_argument);

    q.region = default_quadrature_region(f);
    q.resolution = 0;
    CHECK_THROWS_AS(psi_integral(f, psi_a, M, q), std::invalid_argument);

    q.resolution = 64;
    q.mode = QuadratureSpec::Mode::monte_carlo;
    q.samples = 0;
    CHECK_THROWS_AS(psi_integral(f, psi_a, M, q), std::invalid_argument);
}

TEST_CASE("homogenized_psi: near-constant sequence for a push map, zero for a ball") {
    PuncturedPlane M = standard_plane();
    MapWord f = MapWord::single(standard_twist(M));
    CountingQuasimorphism psi_a(parse_word("a", 2), 1.0);

    QuadratureSpec q;
    q.resolution = 128;
    q.threads = 4;
    q.region = default_quadrature_region(f);

    HomogenizedPsi hp = homogenized_psi(f, psi_a, M, 3, q);
    REQUIRE(hp.sequence.size() == 3);
    // Psi(f^k)/k only drifts by winding round-off on the thin ramp bands
    for (double s : hp.sequence)
        CHECK(std::abs(s - hp.sequence.front()) < 0.02);
    CHECK(hp.value.value == doctest::Approx(hp.sequence.back()).epsilon(1e-12));
    CHECK(hp.value.discretization_note.find("; map-homogenized at k=3") !=
          std::string::npos);

    MapWord fb = MapWord::single(far_ball());
    QuadratureSpec qb;
    qb.resolution = 64;
    qb.region = default_quadrature_region(fb);
    HomogenizedPsi hb = homogenized_psi(fb, psi_a, M, 2, qb);
    CHECK(hb.value.value == 0.0);
    for (double s : hb.sequence) CHECK(s == 0.0);

    CHECK_THROWS_AS(homogenized_psi(f, psi_a, M, 0, q), std::invalid_argument);
}

TEST_CASE("support_intersection_measure: self-overlap recovers the support measure") {
    PuncturedPlane M = standard_plane();
    MapWord f = MapWord::single(standard_twist(M));
    Box region = default_quadrature_region(f);

    double mu = support_intersection_measure(f, f, region, 400000, 11);
    // support is the annulus 1 <= r <= 2 of measure 3*pi; the Monte Carlo
    // standard error at 400k samples over this region is ~0.013
    CHECK(std::abs(mu - 3.0 * kPi) < 0.07);

    MapWord g = MapWord::single(far_small_twist(M));
    Box both = region.united(default_quadrature_region(g));
    CHECK(support_intersection_measure(f, g, both, 200000, 11) == 0.0);

    CHECK_THROWS_AS(support_intersection_measure(f, f, region, 0, 1),
                    std::invalid_argument);
}

TEST_CASE("relative_defect_audit: identity partner gives an exactly zero defect") {
    PuncturedPlane M = standard_plane();
    MapWord f = MapWord::single(standard_twist(M));
    CountingQuasimorphism psi(parse_word("ab", 2));

    QuadratureSpec q;
    q.resolution = 128;
    q.threads = 4;
    DefectAudit da = relative_defect_audit(f, MapWord{}, psi, M, q);
    // fg and f are the same factor list evaluated on the same grid
    CHECK(da.delta_psi == 0.0);
    CHECK(da.mu_intersection == 0.0);
    CHECK(da.psi_g.value == 0.0);
    CHECK(da.pass);
}

TEST_CASE("relative_defect_audit: disjoint supports split the integral") {
    PuncturedPlane M = standard_plane();
    MapWord f = MapWord::single(standard_twist(M));
    MapWord g = MapWord::single(far_small_twist(M));
    CountingQuasimorphism psi_a(parse_word("a", 2), 1.0);

    QuadratureSpec q;
    q.resolution = 128;
    q.threads = 4;
    DefectAudit da = relative_defect_audit(f, g, psi_a, M, q);
    CHECK(da.mu_intersection == 0.0);
    // with disjoint supports the integrands add pointwise; only summation
    // rounding separates Psi(fg) from Psi(f) + Psi(g)
    CHECK(da.delta_psi < 1e-9);
    CHECK(da.pass);
}

TEST_CASE("relative_defect_audit: overlapping twists satisfy the defect bound") {
    PuncturedPlane M = standard_plane();
    auto [ta, tb] = overlapping_pair(M);
    MapWord fa = MapWord::single(ta);
    MapWord fb = MapWord::single(tb);
    CountingQuasimorphism psi_ab(parse_word("ab", 2)); // default bound 6

    QuadratureSpec q;
    q.resolution = 256;
    q.threads = 4;
    DefectAudit da = relative_defect_audit(fa, fb, psi_ab, M, q);
    CHECK(da.defect_bound == 6.0);
    CHECK(da.mu_intersection > 0.5);
    CHECK(da.mu_intersection < 0.9);
    CHECK(da.delta_psi <= da.allowed);
    CHECK(da.pass);
    // the composite genuinely picks up the overlap classes: the defect is
    // visibly nonzero, roughly gap * mu
    CHECK(da.delta_psi > 0.3);
}

TEST_CASE("frag_upper_bound: certified piece counts per factor") {
    PuncturedPlane M = standard_plane();
    MapWord f = MapWord::single(standard_twist(M));
    CHECK(frag_upper_bound(MapWord{}) == 0);
    CHECK(frag_upper_bound(f) == 198);
    CHECK(frag_upper_bound(f.powered(3)) == 3 * 198);

    BallMap small = far_ball(); // disc area pi/4 <= 1
    CHECK(frag_upper_bound(MapWord::single(small)) == 1);

    BallMap big{{0.0, -4.0}, 0.6, 1.0}; // disc area ~1.13 > budget 1
    CHECK_THROWS_AS(frag_upper_bound(MapWord::single(big)), std::invalid_argument);

    HamiltonianShear s{{0.4, -0.2}, 1.2, 0.3, 1.0};
    CHECK_THROWS_AS(frag_upper_bound(MapWord::single(s)), std::invalid_argument);
}

TEST_CASE("frag_lower_bound: positive for the push map, zero for trivial maps") {
    PuncturedPlane M = standard_plane();
    MapWord f = MapWord::single(standard_twist(M));
    CountingQuasimorphism psi_a(parse_word("a", 2), 1.0);

    QuadratureSpec q;
    q.resolution = 128;
    q.threads = 4;
    q.region = default_quadrature_region(f);

    double lb = frag_lower_bound(f, psi_a, M, q, 2);
    // Psihat ~ 9.36 with error deduction ~0.39, defect bound 1 -> ~2.99
    CHECK(lb > 2.7);
    CHECK(lb < 3.2);

    CHECK(frag_lower_bound(MapWord{}, psi_a, M, q, 2) == 0.0);

    MapWord fb = MapWord::single(far_ball());
    QuadratureSpec qb;
    qb.resolution = 64;
    qb.region = default_quadrature_region(fb);
    CHECK(frag_lower_bound(fb, psi_a, M, qb, 2) == 0.0);
}

TEST_CASE("stable_norm_report: linear growth with consistent slope") {
    PuncturedPlane M = standard_plane();
    MapWord f = MapWord::single(standard_twist(M));
    CountingQuasimorphism psi_a(parse_word("a", 2), 1.0);

    QuadratureSpec q;
    q.resolution = 128;
    q.threads = 4;
    q.region = default_quadrature_region(f);

    StableNormReport rep = stable_norm_report(f, psi_a, M, 3, q);
    REQUIRE(rep.rows.size() == 3);
    CHECK(rep.upper_per_power == 198);
    for (const StableNormRow& row : rep.rows) {
        CHECK(row.upper == row.k * 198);
        CHECK(row.lower > 0.0);
        CHECK(row.lower <= double(row.upper));
        // certified lower bounds grow at least linearly in k
        CHECK(row.lower >= double(row.k) * rep.rows.front().lower * 0.99);
    }
    CHECK(rep.homogenized_rate > 0.0);
    CHECK(std::abs(rep.fitted_slope - rep.homogenized_rate) <
          0.10 * rep.homogenized_rate);

    CHECK_THROWS_AS(stable_norm_report(f, psi_a, M, 1, q), std::invalid_argument);
}

TEST_CASE("essential_claim_check: degenerate, disjoint, and passing configurations") {
    PuncturedPlane M = standard_plane();
    auto [ta, tb] = overlapping_pair(M);
    MapWord fa = MapWord::single(ta);
    MapWord fb = MapWord::single(tb);
    CountingQuasimorphism psi_ab(parse_word("ab", 2));

    QuadratureSpec q;
    q.resolution = 256;
    q.threads = 4;
    q.samples = 200000;

    EssentialClaimReport deg = essential_claim_check(fa, MapWord{}, psi_ab, M, q,
                                                     1.0, 0.0, 2);
    CHECK(deg.degenerate);
    CHECK_FALSE(deg.pass);

    MapWord far = MapWord::single(far_small_twist(M));
    MapWord f_std = MapWord::single(standard_twist(M));
    CHECK_THROWS_AS(essential_claim_check(f_std, far, psi_ab, M, q, 1.0, 0.0, 2),
                    std::invalid_argument);

    EssentialClaimReport ec = essential_claim_check(fa, fb, psi_ab, M, q,
                                                    1.0, 0.0, 4);
    CHECK(ec.pass);
    CHECK(ec.mu_overlap > 0.55);
    CHECK(ec.mu_overlap < 0.85);
    CHECK(ec.floor_value > 0.2);
    CHECK(ec.margin > 0.0);
    // the combination tracks gap * mu: overlap points compose to the class
    // ab (value 1) while each factor alone evaluates to 0 under psi_ab
    CHECK(ec.combination > 0.4);
    CHECK(std::abs(ec.combination - ec.mu_overlap) < 0.2);
}

TEST_CASE("psi_integral: conjugation by a disjoint ball map changes nothing") {
    PuncturedPlane M = standard_plane();
    MapWord f = MapWord::single(standard_twist(M));
    MapWord g = MapWord::single(far_ball());
    MapWord conj = compose(compose(g, f), g.inverse());
    CountingQuasimorphism psi_a(parse_word("a", 2), 1.0);

    Box region = default_quadrature_region(conj).united(default_quadrature_region(f));
    QuadratureSpec q;
    q.resolution = 128;
    q.threads = 4;
    q.region = region;

    PsiValue vf = psi_integral(f, psi_a, M, q);
    PsiValue vc = psi_integral(conj, psi_a, M, q);
    // the ball support is disjoint from the twist support and puncture-free:
    // per grid point the trajectories and classes coincide, so on a shared
    // grid the two integrals agree bitwise
    CHECK(vf.value == vc.value);
    CHECK(vf.statistical_error == vc.statistical_error);
}
