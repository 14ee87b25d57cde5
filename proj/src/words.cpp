#include "fragnorm/words.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace fragnorm {

ReducedWord ReducedWord::identity(int rank) {
    if (rank < 0) throw std::out_of_range("rank must be nonnegative");
    ReducedWord w;
    w.rank_ = rank;
    return w;
}

ReducedWord ReducedWord::reduce(int rank, std::span<const int32_t> letters) {
    ReducedWord w = identity(rank);
    w.letters_.reserve(letters.size());
    for (int32_t l : letters) {
        if (l == 0 || std::abs(l) > rank)
            throw std::out_of_range("generator index out of range 1..rank");
        if (!w.letters_.empty() && w.letters_.back() == -l)
            w.letters_.pop_back(); // adjacent inverse pair cancels
        else
            w.letters_.push_back(l);
    }
    return w;
}

std::string ReducedWord::str() const {
    if (letters_.empty()) return "1";
    std::string out;
    for (int32_t l : letters_) {
        int idx = std::abs(l) - 1;
        if (rank_ <= 26) {
            out += char((l > 0 ? 'a' : 'A') + idx);
        } else {
            if (!out.empty()) out += ' ';
            out += (l > 0 ? "g" : "G") + std::to_string(idx + 1);
        }
    }
    return out;
}

namespace {
int common_rank(const ReducedWord& u, const ReducedWord& v) {
    if (u.rank() == v.rank()) return u.rank();
    // Rank-0 identities coerce to the other side; anything else is an error.
    if (u.rank() == 0 && u.is_identity()) return v.rank();
    if (v.rank() == 0 && v.is_identity()) return u.rank();
    throw std::invalid_argument("rank mismatch in word operation");
}
} // namespace

ReducedWord multiply(const ReducedWord& u, const ReducedWord& v) {
    ReducedWord w = ReducedWord::identity(common_rank(u, v));
    w.letters_ = u.letters_;
    for (int32_t l : v.letters_) {
        if (!w.letters_.empty() && w.letters_.back() == -l)
            w.letters_.pop_back();
        else
            w.letters_.push_back(l);
    }
    return w;
}

ReducedWord invert(const ReducedWord& u) {
    ReducedWord w = ReducedWord::identity(u.rank());
    w.letters_.assign(u.letters_.rbegin(), u.letters_.rend());
    for (int32_t& l : w.letters_) l = -l;
    return w;
}

ReducedWord power(const ReducedWord& u, int64_t n) {
    if (n == 0) return ReducedWord::identity(u.rank());
    if (n < 0) return invert(power(u, -n));
    // Square-and-multiply; reduction keeps intermediate sizes tight.
    ReducedWord result = ReducedWord::identity(u.rank());
    ReducedWord base = u;
    while (n > 0) {
        if (n & 1) result = multiply(result, base);
        n >>= 1;
        if (n > 0) base = multiply(base, base);
    }
    return result;
}

ReducedWord parse_word(const std::string& text, int rank) {
    std::vector<int32_t> letters;
    int max_idx = 0;
    for (char c : text) {
        if (c == ' ' || c == '\t') continue;
        int32_t l;
        if (c >= 'a' && c <= 'z') l = c - 'a' + 1;
        else if (c >= 'A' && c <= 'Z') l = -(c - 'A' + 1);
        else throw std::invalid_argument(std::string("bad word character: ") + c);
        max_idx = std::max(max_idx, std::abs(l));
        letters.push_back(l);
    }
    int k = std::max(rank, max_idx);
    return ReducedWord::reduce(k, letters);
}

int64_t count_occurrences(const ReducedWord& pattern, const ReducedWord& g) {
    if (pattern.is_identity())
        throw std::invalid_argument("pattern must be nonempty");
    const auto& p = pattern.letters();
    const auto& w = g.letters();
    if (w.size() < p.size()) return 0;
    int64_t count = 0;
    for (size_t i = 0; i + p.size() <= w.size(); ++i)
        if (std::equal(p.begin(), p.end(), w.begin() + i)) ++count;
    return count;
}

CountingQuasimorphism::CountingQuasimorphism(ReducedWord pattern, double defect_bound)
    : pattern_(std::move(pattern)), inverse_pattern_(invert(pattern_)) {
    if (pattern_.is_identity())
        throw std::invalid_argument("pattern must not be the identity");
    if (defect_bound > 0.0) {
        defect_bound_ = defect_bound;
    } else if (defect_bound == 0.0) {
        defect_bound_ = 6.0 * (pattern_.length() - 1);
        if (defect_bound_ <= 0.0)
            throw std::invalid_argument(
                "single-letter pattern: supply an explicit positive defect bound");
    } else {
        throw std::invalid_argument("defect bound must be positive");
    }
}

double CountingQuasimorphism::value(const ReducedWord& g) const {
    if (g.rank() != rank() && !(g.rank() == 0 && g.is_identity()))
        throw std::invalid_argument("rank mismatch between quasimorphism and word");
    if (g.length() < pattern_.length()) return 0.0;
    return double(count_occurrences(pattern_, g) -
                  count_occurrences(inverse_pattern_, g));
}

double brooks_value(const CountingQuasimorphism& psi, const ReducedWord& g) {
    return psi.value(g);
}

HomogenizationEstimate homogenize(const CountingQuasimorphism& psi,
                                  const ReducedWord& g, int64_t n_max) {
    if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
    HomogenizationEstimate est;
    est.n_used = n_max;
    est.value = psi.value(power(g, n_max)) / double(n_max);
    est.error_bound = psi.defect_bound() / double(n_max);
    return est;
}

namespace {
// All reduced words of length 1..length_bound over rank k, via iterative DFS
// over reduced letter strings. Letters are encoded 0..2k-1 -> (+1,-1,+2,-2,...)
// so enumeration order is deterministic.
std::vector<ReducedWord> enumerate_reduced_words(int k, int length_bound) {
    std::vector<ReducedWord> words;
    std::vector<int32_t> stack;
    auto decode = [](int code) { return (code % 2 == 0) ? (code / 2 + 1) : -(code / 2 + 1); };
    std::vector<int> cursor{0};
    while (!cursor.empty()) {
        int& c = cursor.back();
        if (c >= 2 * k) {
            cursor.pop_back();
            if (!stack.empty()) stack.pop_back();
            continue;
        }
        int32_t letter = decode(c);
        ++c;
        if (!stack.empty() && stack.back() == -letter) continue; // not reduced
        stack.push_back(letter);
        words.push_back(ReducedWord::reduce(k, stack));
        if (int(stack.size()) < length_bound) {
            cursor.push_back(0);
        } else {
            stack.pop_back();
        }
    }
    return words;
}
} // namespace

double defect_estimate(const CountingQuasimorphism& psi, int length_bound) {
    if (length_bound < 1) throw std::invalid_argument("length_bound must be >= 1");
    const int k = psi.rank();
    // All reduced words of length 0..length_bound.
    std::vector<ReducedWord> words;
    words.push_back(ReducedWord::identity(k));
    auto rest = enumerate_reduced_words(k, length_bound);
    words.insert(words.end(), rest.begin(), rest.end());
    double best = 0.0;
    for (const auto& g : words) {
        double vg = psi.value(g);
        for (const auto& h : words) {
            double d = std::abs(psi.value(multiply(g, h)) - vg - psi.value(h));
            best = std::max(best, d);
        }
    }
    return best;
}

std::optional<EssentialityWitness>
essentiality_witness(const CountingQuasimorphism& psi, int length_bound) {
    if (length_bound < 1) return std::nullopt;
    const int k = psi.rank();
    const int64_t n_hom = 1024;

    // Candidate words of length 1..length_bound in (length, lex) order; the
    // identity cannot be part of a witness (its homogenized value is 0 and
    // the gap collapses).
    std::vector<ReducedWord> words = enumerate_reduced_words(k, length_bound);
    // (length, lex) with alphabet order a < a^-1 < b < b^-1 < ..., so the
    // canonical small witnesses surface first.
    auto letter_key = [](int32_t l) { return 2 * std::abs(l) + (l < 0 ? 1 : 0); };
    std::stable_sort(words.begin(), words.end(),
                     [&](const ReducedWord& a, const ReducedWord& b) {
                         if (a.length() != b.length()) return a.length() < b.length();
                         const auto& la = a.letters();
                         const auto& lb = b.letters();
                         for (size_t i = 0; i < la.size(); ++i)
                             if (letter_key(la[i]) != letter_key(lb[i]))
                                 return letter_key(la[i]) < letter_key(lb[i]);
                         return false;
                     });

    std::vector<HomogenizationEstimate> hom(words.size());
    for (size_t i = 0; i < words.size(); ++i) hom[i] = homogenize(psi, words[i], n_hom);

    for (size_t i = 0; i < words.size(); ++i) {
        for (size_t j = 0; j < words.size(); ++j) {
            auto prod = multiply(words[i], words[j]);
            auto hp = homogenize(psi, prod, n_hom);
            double gap = std::abs(hom[i].value + hom[j].value - hp.value);
            double err = hom[i].error_bound + hom[j].error_bound + hp.error_bound;
            if (gap - err > 0.0) {
                EssentialityWitness w;
                w.alpha = words[i];
                w.beta = words[j];
                w.gap = gap;
                w.certified_margin = gap - err;
                return w;
            }
        }
    }
    return std::nullopt;
}

} // namespace fragnorm
