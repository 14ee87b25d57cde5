#include "fragnorm/fragment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fragnorm {

MapWord Fragmentation::as_map_word() const {
    std::vector<Factor> factors;
    factors.reserve(pieces.size());
    // Application order -> composition order (rightmost factor acts first).
    for (auto it = pieces.rbegin(); it != pieces.rend(); ++it) {
        if (it->map.size() != 1)
            throw std::logic_error("fragmentation pieces must be single factors");
        factors.push_back(it->map.factors().front());
    }
    return MapWord(std::move(factors));
}

double Fragmentation::max_piece_measure() const {
    double m = 0.0;
    for (const FragPiece& p : pieces) m = std::max(m, p.measure);
    return m;
}

Fragmentation fragment_tube_twist(const TubeTwist& twist,
                                  const FragmentOptions& options) {
    twist.validate();
    if (!(options.ball_budget > 0.0))
        throw std::invalid_argument("ball budget must be positive");
    if (!(options.sector_width > 0.0 && options.sector_width < kTau))
        throw std::invalid_argument("sector width must be in (0, 2*pi)");
    if (!(options.fill_fraction > 0.0 && options.fill_fraction <= 1.0))
        throw std::invalid_argument("fill fraction must be in (0, 1]");

    Fragmentation out;
    if (twist.turns == 0) return out;

    // Work with the positive-turns twist; a negative twist is its inverse,
    // realized below by reversing the piece order and flipping exponents.
    TubeTwist positive = twist;
    positive.turns = std::abs(twist.turns);

    const double w = options.sector_width;
    const int m = int(std::ceil(kTau * double(positive.turns) / (0.9 * w)));

    // Radial windows with equal-area cores, split until every window's
    // C-shaped support fits inside fill_fraction * budget.
    const double lo2 = twist.r_inner * twist.r_inner;
    const double hi2 = twist.r_outer * twist.r_outer;
    const double circle_frac = 1.0 - w / kTau;

    auto scheme = std::make_shared<FragScheme>();
    scheme->twist = positive;
    scheme->sector_width = w;
    scheme->sector_hi = wrap_tau(options.sector_center + 0.5 * w);
    scheme->steps = m;

    int q = 0;
    for (int cand = 1; cand <= options.max_windows; ++cand) {
        double step2 = (hi2 - lo2) / double(cand);
        auto edge = [&](int j) { return std::sqrt(lo2 + double(j) * step2); };
        double o = std::min(0.1 * (edge(cand) - edge(cand - 1)), 0.5 * twist.r_inner);
        // Outermost window has the largest support area.
        double a_lo = edge(cand - 1) - o, a_hi = edge(cand) + o;
        double area = circle_frac * std::numbers::pi * (a_hi * a_hi - a_lo * a_lo);
        if (area <= options.fill_fraction * options.ball_budget) {
            q = cand;
            scheme->overlap = o;
            for (int j = 1; j <= cand; ++j) {
                FragScheme::Window win;
                win.core_lo = edge(j - 1);
                win.core_hi = edge(j);
                win.support_lo = win.core_lo - o;
                win.support_hi = win.core_hi + o;
                win.step_max = kTau * double(positive.turns) / double(m);
                scheme->windows.push_back(win);
            }
            break;
        }
    }
    if (q == 0)
        throw std::invalid_argument(
            "ball budget unattainable: window count exceeds the cap");

    // Pieces in application order: windows inside out; per window, m steps of
    // (sector carry, then first return).
    std::shared_ptr<const FragScheme> frozen = scheme;
    for (int wi = 0; wi < q; ++wi) {
        for (int s = 0; s < m; ++s) {
            FragPiece carry;
            carry.map = MapWord::single(SectorCarry{frozen, wi});
            carry.support = primitive_support(SectorCarry{frozen, wi});
            carry.measure = region_area(carry.support);
            carry.label = "w" + std::to_string(wi) + ".s" + std::to_string(s) + ".carry";
            out.pieces.push_back(std::move(carry));

            FragPiece ret;
            ret.map = MapWord::single(ReturnMap{frozen, wi});
            ret.support = primitive_support(ReturnMap{frozen, wi});
            ret.measure = region_area(ret.support);
            ret.label = "w" + std::to_string(wi) + ".s" + std::to_string(s) + ".return";
            out.pieces.push_back(std::move(ret));
        }
    }

    if (twist.turns < 0) {
        std::reverse(out.pieces.begin(), out.pieces.end());
        for (FragPiece& p : out.pieces) {
            Factor f = p.map.factors().front();
            f.exponent = -f.exponent;
            p.map = MapWord({f});
        }
    }

    out.scheme = frozen;
    return out;
}

double fragmentation_sup_error(const Fragmentation& frag, const TubeTwist& twist,
                               int n_samples, uint64_t seed) {
    MapWord composed = frag.as_map_word();
    MapWord target = MapWord::single(twist);
    Box box = support_bbox(target).inflated(0.1 * twist.r_outer);
    double worst = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        Vec2 x = box_sample(box, seed, uint64_t(i));
        Vec2 a = composed.evaluate(x);
        Vec2 b = target.evaluate(x);
        worst = std::max(worst, norm(a - b));
    }
    return worst;
}

} // namespace fragnorm
