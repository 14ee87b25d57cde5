#include "fragnorm/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace fragnorm {

// ---- profile ingredients ------------------------------------------------

namespace {
// sigma(u) = exp(-1/u) for u > 0, 0 otherwise: the standard C-infinity glue.
double sigma(double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; }
} // namespace

double smoothstep(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    double a = sigma(u);
    return a / (a + sigma(1.0 - u));
}

double bell(double y) {
    double t = 1.0 - y * y;
    return t > 0.0 ? std::exp(-1.0 / t) : 0.0;
}

double bell_shear(double y) {
    double t = 1.0 - y * y;
    if (t <= 0.0) return 0.0;
    // f + y f' with f' = -2y f / (1-y^2)^2.
    return bell(y) * (1.0 - 2.0 * y * y / (t * t));
}

double y0_solve(double tolerance) {
    if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
    double lo = 0.0, hi = 1.0 - 1e-14; // bell_shear(0) = 1/e > 0, negative near 1
    for (int i = 0; i < 500 && (hi - lo) > 2.0 * tolerance; ++i) {
        double mid = 0.5 * (lo + hi);
        if (bell_shear(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// ---- primitive maps -------------------------------------------------------

void TubeTwist::validate() const {
    if (!(0.0 < r_inner && r_inner < core_lo && core_lo <= core_hi && core_hi < r_outer))
        throw std::invalid_argument("tube twist requires 0 < r_inner < core_lo <= core_hi < r_outer");
}

double TubeTwist::angle_at(double r) const {
    if (r <= r_inner || r >= r_outer) return 0.0;
    double s;
    if (r < core_lo)
        s = smoothstep((r - r_inner) / (core_lo - r_inner));
    else if (r <= core_hi)
        s = 1.0;
    else
        s = smoothstep((r_outer - r) / (r_outer - core_hi));
    return kTau * double(turns) * s;
}

void HamiltonianShear::validate() const {
    if (!(mid_radius > 0.0 && half_width > 0.0 && mid_radius - half_width > 0.0))
        throw std::invalid_argument("shear tube must lie at positive radii");
}

double HamiltonianShear::angle_at(double r) const {
    // Support bounds computed in r-space, bitwise-consistent with the
    // support region reported by primitive_support.
    double e = half_width * y0_exact();
    if (r <= mid_radius - e || r >= mid_radius + e) return 0.0;
    return strength * bell_shear((r - mid_radius) / half_width);
}

void BallMap::validate() const {
    if (!(radius > 0.0)) throw std::invalid_argument("ball map needs positive radius");
    if (disc_area(radius) > 1.0 + 1e-12)
        throw std::invalid_argument("ball map disc must have measure at most one");
}

double BallMap::angle_at(double rho) const {
    if (rho >= radius) return 0.0;
    return max_angle * smoothstep((1.0 - rho / radius) / 0.5);
}

// ---- fragmentation scheme -------------------------------------------------

double FragScheme::sector_coord(Vec2 p) const {
    return wrap_tau(polar_angle(p, twist.center) - sector_hi);
}

bool FragScheme::in_sector(Vec2 p) const {
    return sector_coord(p) >= kTau - sector_width;
}

double FragScheme::chi(int window, double r) const {
    auto bump = [&](const Window& w) {
        return smoothstep((r - w.support_lo) / overlap) *
               smoothstep((w.support_hi - r) / overlap);
    };
    double bi = bump(windows[size_t(window)]);
    if (bi == 0.0) return 0.0;
    double total = 0.0;
    for (const Window& w : windows) total += bump(w);
    return bi / total;
}

double FragScheme::step_angle(int window, double r) const {
    double phi = twist.angle_at(r);
    if (phi == 0.0) return 0.0;
    double c = chi(window, r);
    return c == 0.0 ? 0.0 : phi * c / double(steps);
}

namespace {

// First-return piece u of the window rotation step R: theta -> theta +
// step_angle(r). Points in the excluded sector are fixed; points whose
// rotation would land inside the sector jump across it (the accumulated
// rotation R^n until first exit, a single closed-form rotation). Exponent -1
// is the exact branch inverse.
Vec2 return_map_apply(const FragScheme& S, int wi, Vec2 x, int exponent) {
    const Vec2 c = S.twist.center;
    const auto& W = S.windows[size_t(wi)];
    const double r = norm(x - c);
    if (r <= W.support_lo || r >= W.support_hi) return x;
    const double psi = S.step_angle(wi, r);
    if (psi <= 0.0) return x;
    const double w = S.sector_width;
    const double cend = kTau - w; // sector occupies [cend, tau) in u-coords
    const double u = S.sector_coord(x);
    if (u >= cend) return x; // inside the excluded sector: fixed
    if (exponent > 0) {
        if (u + psi < cend) return rotate_about(c, x, psi);
        double n = std::ceil((kTau - u) / psi); // first exit count
        return rotate_about(c, x, n * psi);
    }
    if (u - psi >= 0.0) return rotate_about(c, x, -psi);
    double nm = std::floor((u + w) / psi) + 1.0; // undo a jump
    return rotate_about(c, x, -nm * psi);
}

// Sector-flux piece v = u^{-1} ∘ R: the identity off the widened sector
// (exactly, returning the input), small rotations inside it, and the
// backward carry for points exiting the sector.
Vec2 sector_carry_apply(const FragScheme& S, int wi, Vec2 x, int exponent) {
    const Vec2 c = S.twist.center;
    const auto& W = S.windows[size_t(wi)];
    const double r = norm(x - c);
    if (r <= W.support_lo || r >= W.support_hi) return x;
    const double psi = S.step_angle(wi, r);
    if (psi <= 0.0) return x;
    const double w = S.sector_width;
    const double cend = kTau - w;
    const double u = S.sector_coord(x);
    if (exponent > 0) {
        if (u < cend) {
            if (u + psi < cend) return x; // plain region: exactly untouched
            return rotate_about(c, x, psi); // pre-sector band -> into sector
        }
        if (u + psi < kTau) return rotate_about(c, x, psi); // inside sector
        // Exiting the sector: send to the point whose first return lands at
        // R(x), i.e. rotate backward by (n-1) steps.
        double uR = u + psi - kTau;
        double nm = std::floor((uR + w) / psi) + 1.0;
        return rotate_about(c, x, (1.0 - nm) * psi);
    }
    // Inverse branches.
    if (u >= cend) return rotate_about(c, x, -psi); // sector -> band / sector
    if (u >= cend - psi) {                          // pre-sector band
        double n = std::ceil((kTau - u) / psi);
        return rotate_about(c, x, (n - 1.0) * psi);
    }
    return x;
}

} // namespace

// ---- composition -----------------------------------------------------------

Vec2 primitive_evaluate(const Primitive& p, Vec2 x, int exponent) {
    return std::visit(
        [&](const auto& prim) -> Vec2 {
            using T = std::decay_t<decltype(prim)>;
            if constexpr (std::is_same_v<T, ReturnMap>) {
                return return_map_apply(*prim.scheme, prim.window, x, exponent);
            } else if constexpr (std::is_same_v<T, SectorCarry>) {
                return sector_carry_apply(*prim.scheme, prim.window, x, exponent);
            } else {
                double r = norm(x - prim.center);
                double a = prim.angle_at(r);
                if (a == 0.0) return x;
                return rotate_about(prim.center, x, exponent > 0 ? a : -a);
            }
        },
        p);
}

MapWord::MapWord(std::vector<Factor> factors) : factors_(std::move(factors)) {
    for (const Factor& f : factors_)
        if (f.exponent != 1 && f.exponent != -1)
            throw std::invalid_argument("factor exponents must be +1 or -1");
}

MapWord MapWord::single(Primitive p, int exponent) {
    return MapWord({Factor{std::move(p), exponent}});
}

Vec2 MapWord::evaluate(Vec2 x) const {
    for (auto it = factors_.rbegin(); it != factors_.rend(); ++it)
        x = primitive_evaluate(it->prim, x, it->exponent);
    return x;
}

MapWord MapWord::inverse() const {
    std::vector<Factor> inv(factors_.rbegin(), factors_.rend());
    for (Factor& f : inv) f.exponent = -f.exponent;
    return MapWord(std::move(inv));
}

MapWord MapWord::powered(int k) const {
    if (k == 0) return MapWord();
    const MapWord& base = k > 0 ? *this : this->inverse();
    std::vector<Factor> out;
    out.reserve(base.size() * size_t(std::abs(k)));
    for (int i = 0; i < std::abs(k); ++i)
        out.insert(out.end(), base.factors_.begin(), base.factors_.end());
    return MapWord(std::move(out));
}

MapWord compose(const MapWord& outer, const MapWord& inner) {
    std::vector<Factor> out = outer.factors();
    out.insert(out.end(), inner.factors().begin(), inner.factors().end());
    return MapWord(std::move(out));
}

// ---- canonical isotopy -------------------------------------------------------

namespace {

// The rotation angle the canonical isotopy draws for one factor at point x.
// For jump branches of the first-return pieces this differs from the
// evaluation angle by a full turn so the drawn arc stays inside the piece's
// support region.
double drawn_angle(const Primitive& p, Vec2 x, int exponent) {
    return std::visit(
        [&](const auto& prim) -> double {
            using T = std::decay_t<decltype(prim)>;
            if constexpr (std::is_same_v<T, ReturnMap>) {
                const FragScheme& S = *prim.scheme;
                const auto& W = S.windows[size_t(prim.window)];
                double r = norm(x - S.twist.center);
                if (r <= W.support_lo || r >= W.support_hi) return 0.0;
                double psi = S.step_angle(prim.window, r);
                if (psi <= 0.0) return 0.0;
                double w = S.sector_width, cend = kTau - w;
                double u = S.sector_coord(x);
                if (u >= cend) return 0.0;
                if (exponent > 0) {
                    if (u + psi < cend) return psi;
                    double n = std::ceil((kTau - u) / psi);
                    return n * psi - kTau; // clockwise arc through the C-shape
                }
                if (u - psi >= 0.0) return -psi;
                double nm = std::floor((u + w) / psi) + 1.0;
                return kTau - nm * psi; // counterclockwise arc back through the C-shape
            } else if constexpr (std::is_same_v<T, SectorCarry>) {
                const FragScheme& S = *prim.scheme;
                const auto& W = S.windows[size_t(prim.window)];
                double r = norm(x - S.twist.center);
                if (r <= W.support_lo || r >= W.support_hi) return 0.0;
                double psi = S.step_angle(prim.window, r);
                if (psi <= 0.0) return 0.0;
                double w = S.sector_width, cend = kTau - w;
                double u = S.sector_coord(x);
                if (exponent > 0) {
                    if (u < cend) return (u + psi < cend) ? 0.0 : psi;
                    if (u + psi < kTau) return psi;
                    double uR = u + psi - kTau;
                    double nm = std::floor((uR + w) / psi) + 1.0;
                    return (1.0 - nm) * psi; // clockwise, stays inside the widened sector
                }
                if (u >= cend) return -psi;
                if (u >= cend - psi) {
                    double n = std::ceil((kTau - u) / psi);
                    return (n - 1.0) * psi;
                }
                return 0.0;
            } else {
                double r = norm(x - prim.center);
                double a = prim.angle_at(r);
                return exponent > 0 ? a : -a;
            }
        },
        p);
}

Vec2 primitive_center(const Primitive& p) {
    return std::visit(
        [](const auto& prim) -> Vec2 {
            using T = std::decay_t<decltype(prim)>;
            if constexpr (std::is_same_v<T, ReturnMap> || std::is_same_v<T, SectorCarry>)
                return prim.scheme->twist.center;
            else
                return prim.center;
        },
        p);
}

// Appends the arc s -> rotate(center, start, s*delta), s in (0,1], splitting
// until every chord subtends at most pi/4 at every puncture.
void append_arc(Polyline& out, const PuncturedPlane& M, Vec2 center, Vec2 start,
                double delta, double base_step) {
    int n0 = std::max(1, int(std::ceil(std::abs(delta) / base_step)));
    const double cap = std::numbers::pi / 4.0;

    std::function<void(double, double, Vec2, Vec2, int)> refine =
        [&](double s0, double s1, Vec2 p0, Vec2 p1, int depth) {
            bool fine = true;
            for (Vec2 q : M.punctures()) {
                Vec2 a = p0 - q, b = p1 - q;
                double ang = std::atan2(std::abs(cross(a, b)), dot(a, b));
                if (ang > cap) {
                    fine = false;
                    break;
                }
            }
            if (fine || depth >= 24) {
                out.vertices.push_back(p1);
                return;
            }
            double sm = 0.5 * (s0 + s1);
            Vec2 pm = rotate_about(center, start, sm * delta);
            refine(s0, sm, p0, pm, depth + 1);
            refine(sm, s1, pm, p1, depth + 1);
        };

    Vec2 prev = start;
    double sprev = 0.0;
    for (int i = 1; i <= n0; ++i) {
        double s = double(i) / double(n0);
        Vec2 p = rotate_about(center, start, s * delta);
        refine(sprev, s, prev, p, 0);
        prev = p;
        sprev = s;
    }
}

} // namespace

Polyline trajectory(const PuncturedPlane& M, const MapWord& f, Vec2 x,
                    double base_step) {
    Polyline out;
    out.vertices.push_back(x);
    Vec2 cur = x;
    const auto& factors = f.factors();
    for (auto it = factors.rbegin(); it != factors.rend(); ++it) {
        Vec2 target = primitive_evaluate(it->prim, cur, it->exponent);
        if (target == cur) continue;
        double delta = drawn_angle(it->prim, cur, it->exponent);
        append_arc(out, M, primitive_center(it->prim), cur, delta, base_step);
        // The sampled arc end equals the target up to roundoff (jump arcs
        // differ from the evaluation angle by a full turn); pin it exactly
        // so downstream endpoint checks are bitwise.
        out.vertices.back() = target;
        cur = target;
    }
    return out;
}

// ---- support accounting --------------------------------------------------------

double region_area(const Region& region) {
    return std::visit(
        [](const auto& r) -> double {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, DiscRegion>)
                return disc_area(r.radius);
            else if constexpr (std::is_same_v<T, AnnulusRegion>)
                return annulus_area(r.r_inner, r.r_outer);
            else
                return annular_sector_area(r.r_inner, r.r_outer, r.width);
        },
        region);
}

bool region_contains(const Region& region, Vec2 p) {
    return std::visit(
        [&](const auto& r) -> bool {
            using T = std::decay_t<decltype(r)>;
            double d = norm(p - r.center);
            if constexpr (std::is_same_v<T, DiscRegion>) {
                return d < r.radius;
            } else if constexpr (std::is_same_v<T, AnnulusRegion>) {
                return d > r.r_inner && d < r.r_outer;
            } else {
                if (d <= r.r_inner || d >= r.r_outer) return false;
                return wrap_tau(polar_angle(p, r.center) - r.start_angle) < r.width;
            }
        },
        region);
}

Box region_bbox(const Region& region) {
    return std::visit(
        [](const auto& r) -> Box {
            using T = std::decay_t<decltype(r)>;
            double R;
            if constexpr (std::is_same_v<T, DiscRegion>)
                R = r.radius;
            else
                R = r.r_outer;
            return {{r.center.x - R, r.center.y - R}, {r.center.x + R, r.center.y + R}};
        },
        region);
}

Region primitive_support(const Primitive& p) {
    return std::visit(
        [](const auto& prim) -> Region {
            using T = std::decay_t<decltype(prim)>;
            if constexpr (std::is_same_v<T, TubeTwist>) {
                return AnnulusRegion{prim.center, prim.r_inner, prim.r_outer};
            } else if constexpr (std::is_same_v<T, HamiltonianShear>) {
                double e = prim.half_width * y0_exact();
                return AnnulusRegion{prim.center, prim.mid_radius - e, prim.mid_radius + e};
            } else if constexpr (std::is_same_v<T, BallMap>) {
                return DiscRegion{prim.center, prim.radius};
            } else if constexpr (std::is_same_v<T, ReturnMap>) {
                const FragScheme& S = *prim.scheme;
                const auto& W = S.windows[size_t(prim.window)];
                return SectorRegion{S.twist.center, W.support_lo, W.support_hi,
                                    S.sector_hi, kTau - S.sector_width};
            } else {
                const FragScheme& S = *prim.scheme;
                const auto& W = S.windows[size_t(prim.window)];
                double widened = S.sector_width + W.step_max;
                return SectorRegion{S.twist.center, W.support_lo, W.support_hi,
                                    wrap_tau(S.sector_hi - widened), widened};
            }
        },
        p);
}

std::string primitive_name(const Primitive& p) {
    return std::visit(
        [](const auto& prim) -> std::string {
            using T = std::decay_t<decltype(prim)>;
            if constexpr (std::is_same_v<T, TubeTwist>) return "tube_twist";
            else if constexpr (std::is_same_v<T, HamiltonianShear>) return "hamiltonian_shear";
            else if constexpr (std::is_same_v<T, BallMap>) return "ball_map";
            else if constexpr (std::is_same_v<T, ReturnMap>) return "return_map";
            else { (void)prim; return "sector_carry"; }
        },
        p);
}

namespace {

bool region_equal(const Region& a, const Region& b) {
    if (a.index() != b.index()) return false;
    if (const auto* d = std::get_if<DiscRegion>(&a)) {
        const auto& e = std::get<DiscRegion>(b);
        return d->center == e.center && d->radius == e.radius;
    }
    if (const auto* an = std::get_if<AnnulusRegion>(&a)) {
        const auto& e = std::get<AnnulusRegion>(b);
        return an->center == e.center && an->r_inner == e.r_inner && an->r_outer == e.r_outer;
    }
    const auto& s = std::get<SectorRegion>(a);
    const auto& e = std::get<SectorRegion>(b);
    return s.center == e.center && s.r_inner == e.r_inner && s.r_outer == e.r_outer &&
           s.start_angle == e.start_angle && s.width == e.width;
}

double region_outer_radius(const Region& r) {
    if (const auto* d = std::get_if<DiscRegion>(&r)) return d->radius;
    if (const auto* a = std::get_if<AnnulusRegion>(&r)) return a->r_outer;
    return std::get<SectorRegion>(r).r_outer;
}

Vec2 region_center(const Region& r) {
    return std::visit([](const auto& x) { return x.center; }, r);
}

bool region_full_circle(const Region& r) { return r.index() != 2; }

} // namespace

MeasureBound support_measure_bound(const MapWord& f) {
    std::vector<Region> regions;
    for (const Factor& fac : f.factors()) {
        Region r = primitive_support(fac.prim);
        bool dup = false;
        for (const Region& prev : regions)
            if (region_equal(prev, r)) {
                dup = true;
                break;
            }
        if (!dup) regions.push_back(r);
    }
    if (regions.empty()) return {0.0, true};

    // Group by (exact) shared center.
    struct Group {
        Vec2 center;
        std::vector<Region> members;
        double area = 0.0;
        bool exact = true;
        double outer = 0.0;
    };
    std::vector<Group> groups;
    for (const Region& r : regions) {
        Vec2 c = region_center(r);
        Group* g = nullptr;
        for (Group& cand : groups)
            if (cand.center == c) {
                g = &cand;
                break;
            }
        if (!g) {
            groups.push_back({c, {}, 0.0, true, 0.0});
            g = &groups.back();
        }
        g->members.push_back(r);
        g->outer = std::max(g->outer, region_outer_radius(r));
    }

    for (Group& g : groups) {
        bool all_full = std::all_of(g.members.begin(), g.members.end(), region_full_circle);
        if (g.members.size() == 1) {
            g.area = region_area(g.members[0]);
        } else if (all_full) {
            // Union of concentric full-circle regions: merge r^2-intervals.
            std::vector<std::pair<double, double>> iv;
            for (const Region& r : g.members) {
                if (const auto* d = std::get_if<DiscRegion>(&r))
                    iv.push_back({0.0, d->radius * d->radius});
                else {
                    const auto& a = std::get<AnnulusRegion>(r);
                    iv.push_back({a.r_inner * a.r_inner, a.r_outer * a.r_outer});
                }
            }
            std::sort(iv.begin(), iv.end());
            double total = 0.0, lo = iv[0].first, hi = iv[0].second;
            for (size_t i = 1; i < iv.size(); ++i) {
                if (iv[i].first <= hi) {
                    hi = std::max(hi, iv[i].second);
                } else {
                    total += hi - lo;
                    lo = iv[i].first;
                    hi = iv[i].second;
                }
            }
            total += hi - lo;
            g.area = std::numbers::pi * total;
        } else {
            for (const Region& r : g.members) g.area += region_area(r);
            g.exact = false; // concentric sectors may overlap; sum is a bound
        }
    }

    bool disjoint = true;
    for (size_t i = 0; i < groups.size(); ++i)
        for (size_t j = i + 1; j < groups.size(); ++j)
            if (norm(groups[i].center - groups[j].center) <=
                groups[i].outer + groups[j].outer)
                disjoint = false;

    double total = 0.0;
    bool exact = true;
    for (const Group& g : groups) {
        total += g.area;
        exact = exact && g.exact;
    }
    if (disjoint) return {total, exact};

    // Special case: exactly two overlapping discs -> inclusion-exclusion.
    if (groups.size() == 2 && groups[0].members.size() == 1 &&
        groups[1].members.size() == 1) {
        const auto* d0 = std::get_if<DiscRegion>(&groups[0].members[0]);
        const auto* d1 = std::get_if<DiscRegion>(&groups[1].members[0]);
        if (d0 && d1) {
            double lens = disc_lens_area(d0->radius, d1->radius,
                                         norm(d0->center - d1->center));
            return {total - lens, true};
        }
    }
    return {total, false};
}

Box support_bbox(const MapWord& f) {
    bool first = true;
    Box out{{0, 0}, {0, 0}};
    for (const Factor& fac : f.factors()) {
        Box b = region_bbox(primitive_support(fac.prim));
        out = first ? b : out.united(b);
        first = false;
    }
    return out;
}

bool in_any_support(const MapWord& f, Vec2 p) {
    for (const Factor& fac : f.factors())
        if (region_contains(primitive_support(fac.prim), p)) return true;
    return false;
}

double area_defect(const MapWord& f, const Box& region, int n_samples, uint64_t seed) {
    if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
    const double h = 1e-6;
    double worst = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        Vec2 x = box_sample(region, seed, uint64_t(i));
        Vec2 fx_p = f.evaluate({x.x + h, x.y});
        Vec2 fx_m = f.evaluate({x.x - h, x.y});
        Vec2 fy_p = f.evaluate({x.x, x.y + h});
        Vec2 fy_m = f.evaluate({x.x, x.y - h});
        double j00 = (fx_p.x - fx_m.x) / (2.0 * h);
        double j10 = (fx_p.y - fx_m.y) / (2.0 * h);
        double j01 = (fy_p.x - fy_m.x) / (2.0 * h);
        double j11 = (fy_p.y - fy_m.y) / (2.0 * h);
        worst = std::max(worst, std::abs(j00 * j11 - j01 * j10 - 1.0));
    }
    return worst;
}

// ---- push-map construction --------------------------------------------------------

TubeTwist make_push_map(const PuncturedPlane& M, const std::vector<int>& enclosed,
                        double area_budget, double core_fraction, int turns) {
    if (enclosed.empty()) throw std::invalid_argument("must enclose at least one puncture");
    if (!(area_budget > 0.0)) throw std::invalid_argument("area budget must be positive");
    if (!(core_fraction > 0.0 && core_fraction < 1.0))
        throw std::invalid_argument("core fraction must be in (0,1)");
    std::vector<int> sorted = enclosed;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw std::invalid_argument("enclosed puncture indices must be distinct");
    for (int i : sorted)
        if (i < 0 || i >= M.rank())
            throw std::invalid_argument("enclosed puncture index out of range");

    Vec2 c{0, 0};
    for (int i : sorted) c = c + M.puncture(i);
    c = c * (1.0 / double(sorted.size()));
    double r_req = 0.0;
    for (int i : sorted) r_req = std::max(r_req, norm(M.puncture(i) - c));

    // Scale so a single-puncture loop with the 3*pi budget gets the unit
    // inner radius; multi-puncture loops get 20% clearance over the farthest
    // enclosed puncture.
    double s = std::sqrt(area_budget / (3.0 * std::numbers::pi));
    double r_in = std::max(1.2 * r_req, s);
    double r_out = std::sqrt(r_in * r_in + area_budget / std::numbers::pi);

    for (int i = 0; i < M.rank(); ++i) {
        if (std::find(sorted.begin(), sorted.end(), i) != sorted.end()) continue;
        if (norm(M.puncture(i) - c) <= r_out)
            throw std::invalid_argument(
                "puncture " + std::to_string(i) +
                " is inside or too close to the requested annulus");
    }
    double zd = norm(M.basepoint() - c);
    if (zd > r_in && zd < r_out)
        throw std::invalid_argument("basepoint lies inside the annulus support");

    double mid2 = 0.5 * (r_in * r_in + r_out * r_out);
    double half = 0.5 * core_fraction * (r_out * r_out - r_in * r_in);
    TubeTwist t;
    t.center = c;
    t.r_inner = r_in;
    t.r_outer = r_out;
    t.core_lo = std::sqrt(mid2 - half);
    t.core_hi = std::sqrt(mid2 + half);
    t.turns = turns;
    t.validate();
    return t;
}

} // namespace fragnorm
