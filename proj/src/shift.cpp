#include <perturbex/shift.hpp>

#include <algorithm>
#include <numeric>
#include <queue>
#include <stdexcept>

namespace perturbex {

namespace {

// Reachability over the allowed-transition digraph.
std::vector<bool> reachable_from(const Eigen::MatrixXi& a, int start) {
    const int n = static_cast<int>(a.rows());
    std::vector<bool> seen(n, false);
    std::queue<int> q;
    seen[start] = true;
    q.push(start);
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int v = 0; v < n; ++v)
            if (a(u, v) != 0 && !seen[v]) {
                seen[v] = true;
                q.push(v);
            }
    }
    return seen;
}

bool is_irreducible(const Eigen::MatrixXi& a) {
    const int n = static_cast<int>(a.rows());
    for (int s = 0; s < n; ++s) {
        auto seen = reachable_from(a, s);
        if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) return false;
    }
    return true;
}

// gcd of cycle lengths via BFS level sets: within one strongly connected
// piece, every edge (u, v) closes a cycle of length level[u] + 1 - level[v]
// against the BFS tree, and the gcd over edges is the period.
int digraph_period(const Eigen::MatrixXi& a) {
    const int n = static_cast<int>(a.rows());
    std::vector<int> level(n, -1);
    int g = 0;
    for (int root = 0; root < n; ++root) {
        if (level[root] >= 0) continue;
        auto fwd = reachable_from(a, root);
        level[root] = 0;
        std::queue<int> q;
        q.push(root);
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int v = 0; v < n; ++v) {
                if (a(u, v) == 0) continue;
                if (level[v] < 0) {
                    level[v] = level[u] + 1;
                    q.push(v);
                } else if (fwd[v] && reachable_from(a, v)[u]) {
                    // u,v in the same strong component: cycle through this edge
                    g = std::gcd(g, std::abs(level[u] + 1 - level[v]));
                }
            }
        }
    }
    return g == 0 ? 1 : g;
}

}  // namespace

ShiftSpace::ShiftSpace(Eigen::MatrixXi transition, std::vector<int> pruned, std::vector<int> labels)
    : transition_(std::move(transition)), pruned_(std::move(pruned)), labels_(std::move(labels)) {
    irreducible_ = is_irreducible(transition_);
    period_ = digraph_period(transition_);
}

const WordIndex& ShiftSpace::words(int depth) const {
    if (depth < 1) throw std::invalid_argument("word depth must be >= 1");
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto it = word_cache_.find(depth);
    if (it != word_cache_.end()) return *it->second;

    auto idx = std::make_unique<WordIndex>();
    idx->depth = depth;
    idx->num_states = num_states();
    std::vector<std::int32_t> stack(depth, 0);
    // depth-first in symbol order gives the lexicographic listing directly
    std::vector<std::int32_t> word;
    word.reserve(depth);
    struct Frame {
        int next_symbol;
    };
    std::vector<Frame> frames;
    frames.push_back({0});
    while (!frames.empty()) {
        Frame& fr = frames.back();
        int pos = static_cast<int>(frames.size()) - 1;
        bool advanced = false;
        for (int s = fr.next_symbol; s < num_states(); ++s) {
            if (pos > 0 && transition_(word[pos - 1], s) == 0) continue;
            fr.next_symbol = s + 1;
            word.push_back(s);
            if (pos + 1 == depth) {
                idx->position.emplace(idx->pack(word.data(), depth), idx->count());
                idx->flat.insert(idx->flat.end(), word.begin(), word.end());
                word.pop_back();
            } else {
                frames.push_back({0});
            }
            advanced = true;
            break;
        }
        if (!advanced) {
            frames.pop_back();
            if (!word.empty()) word.pop_back();
        }
    }
    const WordIndex& ref = *idx;
    word_cache_.emplace(depth, std::move(idx));
    return ref;
}

ShiftPtr build_shift(const Eigen::MatrixXi& transition) {
    if (transition.rows() != transition.cols()) throw std::invalid_argument("transition matrix must be square");
    const int n = static_cast<int>(transition.rows());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (transition(i, j) != 0 && transition(i, j) != 1)
                throw std::invalid_argument("transition matrix must be 0/1");

    std::vector<bool> alive(n, true);
    bool changed = true;
    while (changed) {
        changed = false;
        for (int i = 0; i < n; ++i) {
            if (!alive[i]) continue;
            int out = 0, in = 0;
            for (int j = 0; j < n; ++j) {
                if (alive[j] && transition(i, j)) ++out;
                if (alive[j] && transition(j, i)) ++in;
            }
            if (out == 0 || in == 0) {
                alive[i] = false;
                changed = true;
            }
        }
    }

    std::vector<int> labels, pruned;
    for (int i = 0; i < n; ++i) (alive[i] ? labels : pruned).push_back(i);
    if (labels.empty()) throw std::invalid_argument("shift is empty after pruning dead symbols");

    const int m = static_cast<int>(labels.size());
    Eigen::MatrixXi sub(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) sub(i, j) = transition(labels[i], labels[j]);

    return std::make_shared<ShiftSpace>(std::move(sub), std::move(pruned), std::move(labels));
}

DepthFn::DepthFn(ShiftPtr s, int d, Eigen::VectorXd v) : shift(std::move(s)), depth(d), values(std::move(v)) {
    if (values.size() != shift->words(depth).count())
        throw std::invalid_argument("DepthFn: value count does not match admissible words");
}

DepthFn::DepthFn(ShiftPtr s, int d, double fill) : shift(std::move(s)), depth(d) {
    values = Eigen::VectorXd::Constant(shift->words(depth).count(), fill);
}

namespace {
void require_compatible(const DepthFn& f, const DepthFn& g) {
    if (f.shift.get() != g.shift.get() || f.depth != g.depth)
        throw std::invalid_argument("DepthFn operands live on different shifts or depths");
}
}  // namespace

DepthFn operator+(const DepthFn& f, const DepthFn& g) {
    require_compatible(f, g);
    return DepthFn(f.shift, f.depth, Eigen::VectorXd(f.values + g.values));
}

DepthFn operator-(const DepthFn& f, const DepthFn& g) {
    require_compatible(f, g);
    return DepthFn(f.shift, f.depth, Eigen::VectorXd(f.values - g.values));
}

DepthFn operator*(const DepthFn& f, const DepthFn& g) {
    require_compatible(f, g);
    return DepthFn(f.shift, f.depth, Eigen::VectorXd(f.values.cwiseProduct(g.values)));
}

DepthFn operator*(double s, const DepthFn& f) { return DepthFn(f.shift, f.depth, Eigen::VectorXd(s * f.values)); }

const WordIndex& admissible_words(const ShiftPtr& shift, int depth) { return shift->words(depth); }

DepthFn refine(const DepthFn& f, int m) {
    if (m < f.depth) throw std::invalid_argument("refine: target depth below current depth");
    if (m == f.depth) return f;
    const WordIndex& fine = f.shift->words(m);
    const WordIndex& coarse = f.shift->words(f.depth);
    Eigen::VectorXd out(fine.count());
    for (int i = 0; i < fine.count(); ++i) {
        int j = coarse.index_of(fine.word(i));
        out(i) = f.values(j);
    }
    return DepthFn(f.shift, m, std::move(out));
}

double sup_norm(const DepthFn& f) { return f.values.size() == 0 ? 0.0 : f.values.cwiseAbs().maxCoeff(); }

double lipschitz_seminorm(const DepthFn& f, double theta, int min_cylinder) {
    if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("theta must lie in (0,1)");
    if (min_cylinder < 1) throw std::invalid_argument("min_cylinder must be >= 1");
    const int m = f.depth;
    if (m <= min_cylinder) return 0.0;
    const WordIndex& idx = f.shift->words(m);
    const int count = idx.count();

    double best = 0.0;
    // Words are lexicographic, so blocks sharing a prefix of length j are
    // contiguous and split at position j into runs per symbol.
    for (int j = min_cylinder; j <= m - 1; ++j) {
        const double scale = 1.0 / std::pow(theta, j);
        int block_start = 0;
        while (block_start < count) {
            int block_end = block_start + 1;
            while (block_end < count &&
                   std::equal(idx.word(block_start), idx.word(block_start) + j, idx.word(block_end)))
                ++block_end;
            // per-symbol-at-j extremes inside the block
            double grand_max = -1e300, grand_min = 1e300;
            double second_max = -1e300, second_min = 1e300;
            int max_sym = -1, min_sym = -1;
            int run_start = block_start;
            while (run_start < block_end) {
                int sym = idx.word(run_start)[j];
                int run_end = run_start + 1;
                while (run_end < block_end && idx.word(run_end)[j] == sym) ++run_end;
                double lo = 1e300, hi = -1e300;
                for (int i = run_start; i < run_end; ++i) {
                    lo = std::min(lo, f.values(i));
                    hi = std::max(hi, f.values(i));
                }
                if (hi > grand_max) {
                    second_max = grand_max;
                    grand_max = hi;
                    max_sym = sym;
                } else if (hi > second_max) {
                    second_max = hi;
                }
                if (lo < grand_min) {
                    second_min = grand_min;
                    grand_min = lo;
                    min_sym = sym;
                } else if (lo < second_min) {
                    second_min = lo;
                }
                run_start = run_end;
            }
            double diff = 0.0;
            if (max_sym != min_sym)
                diff = grand_max - grand_min;
            else
                diff = std::max(grand_max - second_min, second_max - grand_min);
            if (diff > 0.0 && diff < 1e300) best = std::max(best, diff * scale);
            block_start = block_end;
        }
    }
    return best;
}

double ftheta_norm(const DepthFn& f, double theta) { return sup_norm(f) + lipschitz_seminorm(f, theta); }

}  // namespace perturbex
