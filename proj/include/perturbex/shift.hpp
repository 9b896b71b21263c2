#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <mutex>
#include <map>
#include <unordered_map>
#include <vector>

namespace perturbex {

/// All admissible words of one depth over a shift, in lexicographic order,
/// with an inverse lookup. Immutable once built.
struct WordIndex {
    int depth = 0;
    int num_states = 0;
    std::vector<std::int32_t> flat;  // count * depth symbols
    std::unordered_map<std::uint64_t, int> position;

    int count() const { return depth == 0 ? 0 : static_cast<int>(flat.size()) / depth; }

    const std::int32_t* word(int i) const { return flat.data() + static_cast<std::size_t>(i) * depth; }

    std::uint64_t pack(const std::int32_t* w, int len) const {
        std::uint64_t key = 0;
        for (int j = 0; j < len; ++j) key = key * static_cast<std::uint64_t>(num_states) + static_cast<std::uint64_t>(w[j]);
        return key;
    }

    /// Index of a word given as its leading symbols; -1 if not admissible.
    int index_of(const std::int32_t* w) const {
        auto it = position.find(pack(w, depth));
        return it == position.end() ? -1 : it->second;
    }
};

/// Finite topological Markov shift over dense symbols 0..n-1. States without
/// an outgoing or incoming transition are pruned at construction and reported
/// through pruned_states() (original symbol ids). Immutable afterwards; the
/// per-depth word index cache is guarded for concurrent use.
class ShiftSpace {
public:
    ShiftSpace(Eigen::MatrixXi transition, std::vector<int> pruned, std::vector<int> original_labels);

    int num_states() const { return static_cast<int>(transition_.rows()); }
    const Eigen::MatrixXi& transition() const { return transition_; }
    int period() const { return period_; }
    bool irreducible() const { return irreducible_; }
    const std::vector<int>& pruned_states() const { return pruned_; }
    /// Original symbol id of each kept state (identity when nothing was pruned).
    const std::vector<int>& original_labels() const { return labels_; }

    const WordIndex& words(int depth) const;

private:
    Eigen::MatrixXi transition_;
    std::vector<int> pruned_;
    std::vector<int> labels_;
    int period_ = 1;
    bool irreducible_ = false;

    mutable std::mutex cache_mutex_;
    mutable std::map<int, std::unique_ptr<WordIndex>> word_cache_;
};

using ShiftPtr = std::shared_ptr<const ShiftSpace>;

/// Validates, prunes dead symbols, and computes period/irreducibility.
/// Throws if the matrix is not square 0/1 or nothing survives pruning.
ShiftPtr build_shift(const Eigen::MatrixXi& transition);

/// Depth-m locally constant function: one value per admissible m-word.
struct DepthFn {
    ShiftPtr shift;
    int depth = 0;
    Eigen::VectorXd values;

    DepthFn() = default;
    DepthFn(ShiftPtr s, int d, Eigen::VectorXd v);
    DepthFn(ShiftPtr s, int d, double fill);
};

DepthFn operator+(const DepthFn& f, const DepthFn& g);
DepthFn operator-(const DepthFn& f, const DepthFn& g);
DepthFn operator*(const DepthFn& f, const DepthFn& g);  // pointwise
DepthFn operator*(double s, const DepthFn& f);

const WordIndex& admissible_words(const ShiftPtr& shift, int depth);

/// g(w) = f(first depth(f) symbols of w) on every admissible word of depth m.
DepthFn refine(const DepthFn& f, int m);

double sup_norm(const DepthFn& f);

/// [f]^{min_cylinder}_theta on the depth-m representation: max over j in
/// [min_cylinder, m-1] and admissible word pairs agreeing on the first j
/// symbols and differing at position j of |f(w) - f(w')| / theta^j.
/// Zero for depth-1 functions (constant on 1-cylinders).
double lipschitz_seminorm(const DepthFn& f, double theta, int min_cylinder = 1);

/// ||f||_C + [f]^1_theta, the Lipschitz-space norm on the finite representation.
double ftheta_norm(const DepthFn& f, double theta);

}  // namespace perturbex
