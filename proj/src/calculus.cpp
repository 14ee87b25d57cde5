#include "fragnorm/calculus.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <vector>

namespace fragnorm {

Box default_quadrature_region(const MapWord& f) {
    if (f.empty()) return Box{{-1.0, -1.0}, {1.0, 1.0}};
    Box b = support_bbox(f);
    double diag = norm(b.hi - b.lo);
    return b.inflated(0.01 * std::max(diag, 1.0));
}

namespace {

// Per-thread memo of psihat values keyed by the word's print form.
class PsiCache {
public:
    double lookup(const CountingQuasimorphism& psi, const ReducedWord& w,
                  bool raw, int64_t hom_n) {
        if (w.is_identity()) return 0.0;
        std::string key = w.str();
        auto it = map_.find(key);
        if (it != map_.end()) return it->second;
        double v = raw ? brooks_value(psi, w) : homogenize(psi, w, hom_n).value;
        map_.emplace(std::move(key), v);
        return v;
    }

private:
    std::unordered_map<std::string, double> map_;
};

double integrand_at(const MapWord& f, const CountingQuasimorphism& psi,
                    const PuncturedPlane& M, const QuadratureSpec& quad,
                    Vec2 x, PsiCache& cache, long& retries) {
    auto read = [&](Vec2 p) {
        Vec2 fp = f.evaluate(p);
        Polyline tr = trajectory(M, f, p);
        int r = 0;
        ReducedWord cls = M.loop_class(p, tr, fp, &r);
        retries += r;
        return cache.lookup(psi, cls, quad.use_raw_psi, quad.hom_n);
    };
    try {
        return read(x);
    } catch (const PunctureHitError&) {
        // Degenerate sample (e.g. exactly on a puncture's orbit path): take a
        // deterministic sub-cell jitter and count the retry.
        ++retries;
        return read(x + Vec2{5e-10, 3e-10});
    } catch (const VertexOnRayError&) {
        ++retries;
        return read(x + Vec2{5e-10, 3e-10});
    }
}

void run_workers(int threads, const std::function<void(int)>& body) {
    if (threads <= 1) {
        body(0);
        return;
    }
    std::vector<std::thread> pool;
    std::mutex mu;
    std::exception_ptr first;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            try {
                body(t);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!first) first = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    if (first) std::rethrow_exception(first);
}

PsiValue grid_integral(const MapWord& f, const CountingQuasimorphism& psi,
                       const PuncturedPlane& M, const QuadratureSpec& quad) {
    const int n = quad.resolution;
    if (n < 1) throw std::invalid_argument("grid resolution must be >= 1");
    const Box R = quad.region;
    const double cw = R.width() / n, ch = R.height() / n;
    const double cell = cw * ch;

    std::vector<double> vals(size_t(n) * size_t(n), 0.0);
    std::vector<long> row_points(size_t(n), 0), row_retries(size_t(n), 0);
    std::vector<double> row_max(size_t(n), 0.0);
    std::atomic<int> next_row{0};

    run_workers(quad.threads, [&](int) {
        PsiCache cache;
        for (;;) {
            int i = next_row.fetch_add(1);
            if (i >= n) break;
            double y = R.lo.y + (double(i) + 0.5) * ch;
            long retries = 0, points = 0;
            double mx = 0.0;
            for (int j = 0; j < n; ++j) {
                Vec2 x{R.lo.x + (double(j) + 0.5) * cw, y};
                if (!in_any_support(f, x)) continue;
                double v = integrand_at(f, psi, M, quad, x, cache, retries);
                vals[size_t(i) * size_t(n) + size_t(j)] = v;
                mx = std::max(mx, std::abs(v));
                ++points;
            }
            row_points[size_t(i)] = points;
            row_retries[size_t(i)] = retries;
            row_max[size_t(i)] = mx;
        }
    });

    // Fixed-order reduction: per-row sums left to right, rows bottom to top.
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) row += vals[size_t(i) * size_t(n) + size_t(j)];
        total += row;
    }

    // Total-variation bound on the midpoint error from integrand jumps
    // across cell boundaries (conservative: every jump of height J along a
    // length-L curve contributes about 0.5 * J * L * cell width).
    double tv = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j + 1 < n; ++j)
            tv += std::abs(vals[size_t(i) * size_t(n) + size_t(j + 1)] -
                           vals[size_t(i) * size_t(n) + size_t(j)]);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i + 1 < n; ++i)
            tv += std::abs(vals[size_t(i + 1) * size_t(n) + size_t(j)] -
                           vals[size_t(i) * size_t(n) + size_t(j)]);

    PsiValue out;
    out.value = total * cell;
    for (int i = 0; i < n; ++i) {
        out.points_evaluated += row_points[size_t(i)];
        out.nudge_retries += row_retries[size_t(i)];
        out.max_abs_integrand = std::max(out.max_abs_integrand, row_max[size_t(i)]);
    }
    double evaluated_measure = double(out.points_evaluated) * cell;
    out.statistical_error =
        std::max(0.5 * cell * tv, 1e-15 * std::abs(out.value));
    out.homogenization_bias =
        quad.use_raw_psi ? 0.0
                         : psi.defect_bound() / double(quad.hom_n) * evaluated_measure;
    std::ostringstream note;
    note << "grid " << n << "x" << n << " midpoint, cell area " << cell;
    out.discretization_note = note.str();
    return out;
}

PsiValue mc_integral(const MapWord& f, const CountingQuasimorphism& psi,
                     const PuncturedPlane& M, const QuadratureSpec& quad) {
    const long total_samples = quad.samples;
    if (total_samples < 1) throw std::invalid_argument("sample count must be >= 1");
    const Box R = quad.region;
    const double area = R.area();
    const long chunk = 8192;
    const long n_chunks = (total_samples + chunk - 1) / chunk;

    std::vector<double> sums(size_t(n_chunks), 0.0), sqs(size_t(n_chunks), 0.0);
    std::vector<double> maxs(size_t(n_chunks), 0.0);
    std::vector<long> points(size_t(n_chunks), 0), retries(size_t(n_chunks), 0);
    std::atomic<long> next_chunk{0};

    run_workers(quad.threads, [&](int) {
        PsiCache cache;
        for (;;) {
            long c = next_chunk.fetch_add(1);
            if (c >= n_chunks) break;
            long lo = c * chunk, hi = std::min(total_samples, lo + chunk);
            double s = 0.0, s2 = 0.0, mx = 0.0;
            long pts = 0, ret = 0;
            for (long idx = lo; idx < hi; ++idx) {
                Vec2 x = box_sample(R, quad.seed, uint64_t(idx));
                double v = 0.0;
                if (in_any_support(f, x)) {
                    v = integrand_at(f, psi, M, quad, x, cache, ret);
                    ++pts;
                }
                s += v;
                s2 += v * v;
                mx = std::max(mx, std::abs(v));
            }
            sums[size_t(c)] = s;
            sqs[size_t(c)] = s2;
            maxs[size_t(c)] = mx;
            points[size_t(c)] = pts;
            retries[size_t(c)] = ret;
        }
    });

    double s = 0.0, s2 = 0.0;
    PsiValue out;
    for (long c = 0; c < n_chunks; ++c) {
        s += sums[size_t(c)];
        s2 += sqs[size_t(c)];
        out.points_evaluated += points[size_t(c)];
        out.nudge_retries += retries[size_t(c)];
        out.max_abs_integrand = std::max(out.max_abs_integrand, maxs[size_t(c)]);
    }
    double mean = s / double(total_samples);
    double var = std::max(0.0, s2 / double(total_samples) - mean * mean);
    out.value = mean * area;
    out.statistical_error = area * std::sqrt(var / double(total_samples));
    out.homogenization_bias =
        quad.use_raw_psi
            ? 0.0
            : psi.defect_bound() / double(quad.hom_n) * area *
                  double(out.points_evaluated) / double(total_samples);
    std::ostringstream note;
    note << "monte-carlo " << total_samples << " samples, seed " << quad.seed;
    out.discretization_note = note.str();
    return out;
}

} // namespace

PsiValue psi_integral(const MapWord& f, const CountingQuasimorphism& psi,
                      const PuncturedPlane& M, const QuadratureSpec& quad) {
    if (f.empty()) {
        PsiValue out;
        out.discretization_note = "identity map: zero exactly";
        return out;
    }
    Box need = support_bbox(f);
    if (!quad.region.contains(need))
        throw std::invalid_argument(
            "quadrature region does not contain the union of factor supports");
    return quad.mode == QuadratureSpec::Mode::grid ? grid_integral(f, psi, M, quad)
                                                   : mc_integral(f, psi, M, quad);
}

HomogenizedPsi homogenized_psi(const MapWord& f, const CountingQuasimorphism& psi,
                               const PuncturedPlane& M, int k_max,
                               const QuadratureSpec& quad) {
    if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");
    HomogenizedPsi out;
    for (int k = 1; k <= k_max; ++k) {
        PsiValue pk = psi_integral(f.powered(k), psi, M, quad);
        out.sequence.push_back(pk.value / double(k));
        if (k == k_max) {
            out.value = pk;
            out.value.value /= double(k);
            out.value.statistical_error /= double(k);
            out.value.homogenization_bias /= double(k);
            out.value.discretization_note =
                pk.discretization_note + "; map-homogenized at k=" + std::to_string(k);
        }
    }
    return out;
}

double support_intersection_measure(const MapWord& f, const MapWord& g,
                                    const Box& region, long n_samples,
                                    uint64_t seed) {
    if (n_samples < 1) throw std::invalid_argument("sample count must be >= 1");
    long hits = 0;
    for (long i = 0; i < n_samples; ++i) {
        Vec2 x = box_sample(region, seed, uint64_t(i));
        if (in_any_support(f, x) && in_any_support(g, x)) ++hits;
    }
    return region.area() * double(hits) / double(n_samples);
}

DefectAudit relative_defect_audit(const MapWord& f, const MapWord& g,
                                  const CountingQuasimorphism& psi,
                                  const PuncturedPlane& M,
                                  const QuadratureSpec& quad) {
    MapWord fg = compose(f, g);
    QuadratureSpec q = quad;
    // One shared region keeps the three integrals comparable.
    Box shared = default_quadrature_region(fg.empty() ? MapWord() : fg);
    if (!f.empty()) shared = shared.united(default_quadrature_region(f));
    if (!g.empty()) shared = shared.united(default_quadrature_region(g));
    q.region = shared;

    DefectAudit out;
    out.psi_fg = psi_integral(fg, psi, M, q);
    out.psi_f = psi_integral(f, psi, M, q);
    out.psi_g = psi_integral(g, psi, M, q);
    out.delta_psi = std::abs(out.psi_fg.value - out.psi_f.value - out.psi_g.value);
    if (f.empty() || g.empty()) {
        out.mu_intersection = 0.0;
    } else {
        out.mu_intersection = support_intersection_measure(
            f, g, shared, std::max<long>(quad.samples, 100000),
            quad.seed ^ 0x9e3779b97f4a7c15ULL);
    }
    out.defect_bound = psi.defect_bound();
    double errs = out.psi_fg.statistical_error + out.psi_f.statistical_error +
                  out.psi_g.statistical_error + out.psi_fg.homogenization_bias +
                  out.psi_f.homogenization_bias + out.psi_g.homogenization_bias;
    out.allowed = out.defect_bound * out.mu_intersection + 3.0 * errs;
    out.pass = out.delta_psi <= out.allowed;
    return out;
}

long frag_upper_bound(const MapWord& f, double ball_budget) {
    long total = 0;
    for (const Factor& fac : f.factors()) {
        total += std::visit(
            [&](const auto& prim) -> long {
                using T = std::decay_t<decltype(prim)>;
                if constexpr (std::is_same_v<T, TubeTwist>) {
                    FragmentOptions opt;
                    opt.ball_budget = ball_budget;
                    return long(fragment_tube_twist(prim, opt).piece_count());
                } else if constexpr (std::is_same_v<T, HamiltonianShear>) {
                    throw std::invalid_argument(
                        "no certified fragmentation scheme for shear factors");
                } else {
                    double m = region_area(primitive_support(Primitive(prim)));
                    if (m > ball_budget)
                        throw std::invalid_argument(
                            "factor support measure exceeds the ball budget");
                    return 1;
                }
            },
            fac.prim);
    }
    return total;
}

double frag_lower_bound(const MapWord& f, const CountingQuasimorphism& psi,
                        const PuncturedPlane& M, const QuadratureSpec& quad,
                        int k_max) {
    if (!(psi.defect_bound() > 0.0))
        throw std::invalid_argument("defect bound must be positive");
    HomogenizedPsi hp = homogenized_psi(f, psi, M, k_max, quad);
    double certified = std::abs(hp.value.value) - hp.value.statistical_error -
                       hp.value.homogenization_bias;
    return std::max(0.0, certified / (3.0 * psi.defect_bound()));
}

StableNormReport stable_norm_report(const MapWord& f,
                                    const CountingQuasimorphism& psi,
                                    const PuncturedPlane& M, int k_max,
                                    const QuadratureSpec& quad) {
    if (k_max < 2) throw std::invalid_argument("k_max must be >= 2");
    if (!(psi.defect_bound() > 0.0))
        throw std::invalid_argument("defect bound must be positive");
    StableNormReport out;
    out.upper_per_power = frag_upper_bound(f, 1.0);
    double num = 0.0, den = 0.0;
    for (int k = 1; k <= k_max; ++k) {
        PsiValue pk = psi_integral(f.powered(k), psi, M, quad);
        StableNormRow row;
        row.k = k;
        row.psi_value = pk.value;
        row.quad_error = pk.statistical_error;
        double certified =
            std::abs(pk.value) - pk.statistical_error - pk.homogenization_bias;
        row.lower = std::max(0.0, certified / (3.0 * psi.defect_bound()));
        row.upper = long(k) * out.upper_per_power;
        num += double(k) * row.lower;
        den += double(k) * double(k);
        out.rows.push_back(row);
        if (k == k_max)
            out.homogenized_rate =
                std::abs(pk.value) / double(k) / (3.0 * psi.defect_bound());
    }
    out.fitted_slope = den > 0.0 ? num / den : 0.0;
    return out;
}

EssentialClaimReport essential_claim_check(const MapWord& fa, const MapWord& fb,
                                           const CountingQuasimorphism& psi,
                                           const PuncturedPlane& M,
                                           const QuadratureSpec& quad,
                                           double gap, double peripheral_measure,
                                           int hom_k) {
    EssentialClaimReport out;
    out.gap = gap;
    if (fa.empty() || fb.empty()) {
        out.degenerate = true;
        return out;
    }

    MapWord fab = compose(fa, fb);
    QuadratureSpec q = quad;
    Box shared = default_quadrature_region(fab)
                     .united(default_quadrature_region(fa))
                     .united(default_quadrature_region(fb));
    q.region = shared;

    long n_mu = std::max<long>(quad.samples, 200000);
    out.mu_overlap = support_intersection_measure(
        fa, fb, shared, n_mu, quad.seed ^ 0x9e3779b97f4a7c15ULL);
    if (!(out.mu_overlap > 0.0))
        throw std::invalid_argument("supports do not overlap");
    double p_hat = out.mu_overlap / shared.area();
    double mu_se = shared.area() * std::sqrt(p_hat * (1.0 - p_hat) / double(n_mu));

    HomogenizedPsi ha = homogenized_psi(fa, psi, M, hom_k, q);
    HomogenizedPsi hb = homogenized_psi(fb, psi, M, hom_k, q);
    HomogenizedPsi hab = homogenized_psi(fab, psi, M, hom_k, q);

    out.combination =
        std::abs(ha.value.value - hab.value.value + hb.value.value);
    double errs = ha.value.statistical_error + hb.value.statistical_error +
                  hab.value.statistical_error + ha.value.homogenization_bias +
                  hb.value.homogenization_bias + hab.value.homogenization_bias;
    double scale = std::max({ha.value.max_abs_integrand, hb.value.max_abs_integrand,
                             hab.value.max_abs_integrand, 1.0});
    out.delta_hat = peripheral_measure * scale + 3.0 * errs + 3.0 * gap * mu_se;
    out.floor_value = gap * out.mu_overlap - out.delta_hat;
    out.pass = out.floor_value > 0.0 &&
               out.combination + 3.0 * errs >= out.floor_value;
    out.margin = std::min(out.floor_value,
                          out.combination + 3.0 * errs - out.floor_value);
    return out;
}

} // namespace fragnorm
