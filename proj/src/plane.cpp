#include "fragnorm/plane.hpp"

#include <algorithm>
#include <cmath>

namespace fragnorm {

namespace {

// Do two rays (origin + nonnegative multiples of a unit direction) share a
// point? Used to enforce cut-system disjointness at construction.
bool rays_intersect(Vec2 o1, Vec2 d1, Vec2 o2, Vec2 d2) {
    const double denom = cross(d1, d2);
    const Vec2 delta = o2 - o1;
    if (std::abs(denom) > 1e-14) {
        double s = cross(delta, d2) / denom; // along ray 1
        double t = cross(delta, d1) / denom; // along ray 2
        return s >= 0.0 && t >= 0.0;
    }
    // Parallel. Shared points require collinearity.
    if (std::abs(cross(delta, d1)) > 1e-14) return false;
    // Collinear, same direction: one ray contains the other's origin.
    if (dot(d1, d2) > 0.0) return true;
    // Opposite directions: overlap iff the origins face each other.
    return dot(delta, d1) >= 0.0;
}

bool on_ray(Vec2 p, Vec2 origin, Vec2 dir) {
    Vec2 rel = p - origin;
    return std::abs(cross(dir, rel)) == 0.0 && dot(rel, dir) >= 0.0;
}

} // namespace

PuncturedPlane::PuncturedPlane(std::vector<Vec2> punctures, Vec2 basepoint,
                               std::optional<std::vector<Vec2>> ray_directions)
    : punctures_(std::move(punctures)), basepoint_(basepoint) {
    if (punctures_.empty())
        throw std::invalid_argument("need at least one puncture");
    for (size_t i = 0; i < punctures_.size(); ++i)
        for (size_t j = i + 1; j < punctures_.size(); ++j)
            if (punctures_[i] == punctures_[j])
                throw std::invalid_argument("punctures must be pairwise distinct");

    if (ray_directions) {
        if (ray_directions->size() != punctures_.size())
            throw std::invalid_argument("one ray direction per puncture required");
        ray_dirs_.reserve(ray_directions->size());
        for (Vec2 d : *ray_directions) ray_dirs_.push_back(normalized(d));
    } else {
        ray_dirs_.assign(punctures_.size(), Vec2{0.0, -1.0});
    }

    for (size_t i = 0; i < punctures_.size(); ++i)
        for (size_t j = i + 1; j < punctures_.size(); ++j)
            if (rays_intersect(punctures_[i], ray_dirs_[i], punctures_[j], ray_dirs_[j]))
                throw std::invalid_argument(
                    "cut rays " + std::to_string(i) + " and " + std::to_string(j) +
                    " intersect; pass explicit ray directions");

    for (size_t i = 0; i < punctures_.size(); ++i) {
        if (basepoint_ == punctures_[i])
            throw std::invalid_argument("basepoint coincides with a puncture");
        if (on_ray(basepoint_, punctures_[i], ray_dirs_[i]))
            throw std::invalid_argument("basepoint lies on cut ray " + std::to_string(i));
    }

    Box bb{basepoint_, basepoint_};
    for (Vec2 p : punctures_) bb = bb.united({p, p});
    diameter_ = std::max(1.0, std::hypot(bb.width(), bb.height()));
}

ReducedWord PuncturedPlane::path_word(const Polyline& path) const {
    if (path.size() < 1) return ReducedWord::identity(rank());
    std::vector<int32_t> letters;

    struct Crossing {
        double t;
        int ray;
        int32_t letter;
    };
    std::vector<Crossing> seg_crossings;

    const auto& v = path.vertices;
    for (size_t s = 0; s + 1 < v.size(); ++s) {
        Vec2 A = v[s], B = v[s + 1];
        if (A == B) continue; // zero-length segments carry no crossings
        seg_crossings.clear();
        for (int i = 0; i < rank(); ++i) {
            const Vec2 o = punctures_[size_t(i)];
            const Vec2 d = ray_dirs_[size_t(i)];
            if (A == o) throw PunctureHitError(s, i);
            if (B == o) throw PunctureHitError(s, i);
            // side(x) > 0 on the positive side of the ray direction.
            const double sa = cross(d, A - o);
            const double sb = cross(d, B - o);
            if (sa == 0.0 && sb == 0.0) {
                // Whole segment on the ray's line.
                double ra = dot(A - o, d), rb = dot(B - o, d);
                if (std::min(ra, rb) <= 0.0 && std::max(ra, rb) >= 0.0)
                    throw PunctureHitError(s, i);
                if (std::max(ra, rb) > 0.0) throw VertexOnRayError(s, i);
                continue; // entirely strictly behind the ray origin
            }
            if (sa == 0.0) {
                if (dot(A - o, d) > 0.0) throw VertexOnRayError(s, i);
                continue; // touches only the line behind the origin
            }
            if (sb == 0.0) {
                if (dot(B - o, d) > 0.0) throw VertexOnRayError(s + 1, i);
                continue;
            }
            if ((sa < 0.0) == (sb < 0.0)) continue; // same side: no crossing
            const double t = sa / (sa - sb); // strictly interior by the above
            const Vec2 P = A + (B - A) * t;
            const double along = dot(P - o, d);
            if (along > 0.0) {
                seg_crossings.push_back({t, i, sb > 0.0 ? int32_t(i + 1) : int32_t(-(i + 1))});
            } else if (along == 0.0) {
                throw PunctureHitError(s, i);
            } // else: crosses the line strictly behind the origin — free
        }
        std::sort(seg_crossings.begin(), seg_crossings.end(),
                  [](const Crossing& a, const Crossing& b) {
                      if (a.t != b.t) return a.t < b.t;
                      return a.ray < b.ray;
                  });
        for (const Crossing& c : seg_crossings) letters.push_back(c.letter);
    }
    return ReducedWord::reduce(rank(), letters);
}

ReducedWord PuncturedPlane::path_word_robust(Polyline path, int* retries) const {
    const int kMaxRetries = 64;
    for (int attempt = 0;; ++attempt) {
        try {
            return path_word(path);
        } catch (const VertexOnRayError& e) {
            if (attempt >= kMaxRetries) throw;
            size_t idx = e.vertex_index;
            auto& v = path.vertices;
            if (idx == 0 || idx + 1 >= v.size())
                throw; // endpoint degeneracies are precondition violations
            // Deterministic nudge along the outgoing segment; fall back to
            // the incoming one when the outgoing segment is degenerate.
            Vec2 dir = v[idx + 1] - v[idx];
            if (norm(dir) == 0.0) dir = v[idx] - v[idx - 1];
            if (norm(dir) == 0.0) throw;
            v[idx] = v[idx] + normalized(dir) * nudge_epsilon();
            if (retries) ++*retries;
        }
    }
}

Polyline PuncturedPlane::basepoint_path(Vec2 x) const {
    for (Vec2 p : punctures_)
        if (x == p) throw std::invalid_argument("target point is a puncture");
    if (x == basepoint_) return Polyline{{basepoint_}};

    const Vec2 z = basepoint_;
    const Vec2 seg = x - z;
    const double len = norm(seg);
    const Vec2 dir = seg * (1.0 / len);
    const double delta = puncture_clearance();

    // Punctures the open segment approaches within delta, by foot parameter.
    struct Near {
        double t;
        int side; // detour side in the perp(dir) sense
    };
    std::vector<Near> nears;
    for (Vec2 p : punctures_) {
        double t = dot(p - z, dir);
        if (t <= 2.0 * delta || t >= len - 2.0 * delta)
            continue; // too close to an endpoint for a detour; endpoint
                      // proximity is not a pass-through
        Vec2 foot = z + dir * t;
        if (norm(p - foot) >= delta) continue;
        double c = cross(dir, p - z);
        int side = (c > 0.0) ? -1 : +1; // opposite side; exact hit goes +1
        nears.push_back({t, side});
    }
    std::sort(nears.begin(), nears.end(),
              [](const Near& a, const Near& b) { return a.t < b.t; });

    Polyline out;
    out.vertices.push_back(z);
    const Vec2 n = perp(dir);
    for (const Near& nr : nears) {
        Vec2 offset = n * (2.0 * delta * nr.side);
        out.vertices.push_back(z + dir * (nr.t - 2.0 * delta) + offset);
        out.vertices.push_back(z + dir * (nr.t + 2.0 * delta) + offset);
    }
    out.vertices.push_back(x);
    return out;
}

ReducedWord PuncturedPlane::loop_class(Vec2 x, const Polyline& trajectory, Vec2 fx,
                                       int* retries) const {
    if (trajectory.empty() || !(trajectory.front() == x) || !(trajectory.back() == fx))
        throw std::invalid_argument("trajectory endpoints must match x and fx");

    Polyline head = basepoint_path(x);
    Polyline tail = basepoint_path(fx);

    Polyline loop;
    loop.vertices.reserve(head.size() + trajectory.size() + tail.size());
    auto append = [&loop](Vec2 p) {
        if (loop.vertices.empty() || !(loop.vertices.back() == p))
            loop.vertices.push_back(p);
    };
    for (Vec2 p : head.vertices) append(p);
    for (Vec2 p : trajectory.vertices) append(p);
    for (auto it = tail.vertices.rbegin(); it != tail.vertices.rend(); ++it) append(*it);

    return path_word_robust(std::move(loop), retries);
}

double lebesgue_measure_rect(const Box& b) { return b.area(); }
double lebesgue_measure_disc(double radius) { return disc_area(radius); }
double lebesgue_measure_annulus(double r_inner, double r_outer) {
    return annulus_area(r_inner, r_outer);
}

} // namespace fragnorm
