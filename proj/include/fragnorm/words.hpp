// Free-group arithmetic on reduced words plus counting quasimorphisms:
// signed pattern counts, homogenization with certified error bounds,
// defect estimation, and essentiality witnesses.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fragnorm {

// A freely reduced word in the free group F_k. Letters are signed generator
// indices: +i for the i-th generator, -i for its inverse (i in 1..rank).
// Immutable after construction; all operations return new values.
class ReducedWord {
public:
    ReducedWord() = default; // identity in F_0 (rank set on first use)

    static ReducedWord identity(int rank);
    // Freely reduces an arbitrary letter sequence. Throws std::out_of_range
    // if any letter has index 0 or index > rank.
    static ReducedWord reduce(int rank, std::span<const int32_t> letters);

    int rank() const { return rank_; }
    const std::vector<int32_t>& letters() const { return letters_; }
    int length() const { return static_cast<int>(letters_.size()); }
    bool is_identity() const { return letters_.empty(); }

    bool operator==(const ReducedWord&) const = default;

    // Human-readable form: generators a,b,c,... and A,B,C,... for inverses
    // when rank <= 26, otherwise "g3 G7" style.
    std::string str() const;

private:
    int rank_ = 0;
    std::vector<int32_t> letters_;
    friend ReducedWord multiply(const ReducedWord&, const ReducedWord&);
    friend ReducedWord invert(const ReducedWord&);
};

// Group law: reduced form of u·v. Throws std::invalid_argument on rank
// mismatch (identity words of rank 0 coerce to either side).
ReducedWord multiply(const ReducedWord& u, const ReducedWord& v);
ReducedWord invert(const ReducedWord& u);
ReducedWord power(const ReducedWord& u, int64_t n);

// Parses strings like "ab", "aBa" (uppercase = inverse) into a reduced word.
// Rank defaults to the highest letter used; pass rank >= that to embed in a
// bigger free group.
ReducedWord parse_word(const std::string& text, int rank = 0);

// Overlapping occurrences of `pattern` as a contiguous subword of the
// reduced form of g (linear, not cyclic). Throws on empty pattern.
int64_t count_occurrences(const ReducedWord& pattern, const ReducedWord& g);

// A Brooks-style counting quasimorphism psi(g) = #(pattern in g) -
// #(pattern^{-1} in g), together with a certified upper bound on its defect.
class CountingQuasimorphism {
public:
    // defect_bound <= 0 selects the default 6*(|pattern| - 1). Single-letter
    // patterns have default 0, which is not a valid bound object-wise; they
    // must supply an explicit positive bound (any upper bound works — a
    // single-letter count is a homomorphism, so the true defect is 0).
    explicit CountingQuasimorphism(ReducedWord pattern, double defect_bound = 0.0);

    const ReducedWord& pattern() const { return pattern_; }
    double defect_bound() const { return defect_bound_; }
    int rank() const { return pattern_.rank(); }

    double value(const ReducedWord& g) const; // raw (non-homogeneous) value

private:
    ReducedWord pattern_;
    ReducedWord inverse_pattern_;
    double defect_bound_ = 0.0;
};

struct HomogenizationEstimate {
    double value = 0.0;       // psi(g^n)/n at n = n_used
    int64_t n_used = 1;
    double error_bound = 0.0; // |value - true homogenized value| <= this
};

double brooks_value(const CountingQuasimorphism& psi, const ReducedWord& g);

// Single-power homogenization: psi(g^n_max)/n_max with Fekete error
// bound defect_bound/n_max. Throws if n_max < 1.
HomogenizationEstimate homogenize(const CountingQuasimorphism& psi,
                                  const ReducedWord& g, int64_t n_max);

// Max of |psi(gh) - psi(g) - psi(h)| over all reduced words g,h of length
// <= length_bound (exhaustive; a certified lower bound on the true defect).
// Cost grows as (2k)^(2L); keep rank*length_bound small.
double defect_estimate(const CountingQuasimorphism& psi, int length_bound);

struct EssentialityWitness {
    ReducedWord alpha, beta;
    double gap = 0.0;              // |psihat(a) + psihat(b) - psihat(ab)| point estimate
    double certified_margin = 0.0; // gap minus accumulated homogenization errors
};

// Searches words of length <= length_bound (ordered by length, then
// lexicographically) for a pair with a certified positive homogenized gap,
// i.e. gap - errors > 0. Returns nullopt if none exists within the bound —
// in particular for genuine homomorphisms like a single-letter count.
std::optional<EssentialityWitness>
essentiality_witness(const CountingQuasimorphism& psi, int length_bound);

} // namespace fragnorm
