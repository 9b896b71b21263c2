#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace perturbex {

/// Truncated power series of fixed order n: c_0 + c_1 e + ... + c_n e^n.
/// The coefficient space T needs addition and scaling by double; products of
/// jets additionally need a multiplication between the coefficient spaces
/// (scalar*scalar, scalar*function, function*function pointwise, operator
/// applied to function). The order is fixed at construction; mixing orders
/// throws rather than truncating silently.
template <typename T>
class Jet {
public:
    explicit Jet(std::vector<T> coeffs) : coeffs_(std::move(coeffs)) {
        if (coeffs_.empty()) throw std::invalid_argument("Jet: needs at least the constant term");
    }

    Jet(int order, const T& fill) : coeffs_(static_cast<std::size_t>(order) + 1, fill) {
        if (order < 0) throw std::invalid_argument("Jet: negative order");
    }

    int order() const { return static_cast<int>(coeffs_.size()) - 1; }

    const T& operator[](int k) const { return coeffs_.at(static_cast<std::size_t>(k)); }
    T& operator[](int k) { return coeffs_.at(static_cast<std::size_t>(k)); }

    const std::vector<T>& coeffs() const { return coeffs_; }

private:
    std::vector<T> coeffs_;
};

using ScalarJet = Jet<double>;

namespace detail {
inline void require_same_order(int a, int b) {
    if (a != b) throw std::invalid_argument("jet order mismatch");
}
}  // namespace detail

template <typename T>
Jet<T> operator+(const Jet<T>& a, const Jet<T>& b) {
    detail::require_same_order(a.order(), b.order());
    std::vector<T> c(a.coeffs());
    for (int k = 0; k <= a.order(); ++k) c[static_cast<std::size_t>(k)] = a[k] + b[k];
    return Jet<T>(std::move(c));
}

template <typename T>
Jet<T> operator-(const Jet<T>& a, const Jet<T>& b) {
    detail::require_same_order(a.order(), b.order());
    std::vector<T> c(a.coeffs());
    for (int k = 0; k <= a.order(); ++k) c[static_cast<std::size_t>(k)] = a[k] - b[k];
    return Jet<T>(std::move(c));
}

template <typename T>
Jet<T> operator*(double s, const Jet<T>& a) {
    std::vector<T> c(a.coeffs());
    for (auto& ck : c) ck = s * ck;
    return Jet<T>(std::move(c));
}

/// Degree-truncated Cauchy product. The coefficient spaces may differ as long
/// as operator* is defined between them (e.g. scalar jet times function jet).
template <typename A, typename B>
auto jet_mul(const Jet<A>& a, const Jet<B>& b) -> Jet<decltype(a[0] * b[0])> {
    detail::require_same_order(a.order(), b.order());
    using C = decltype(a[0] * b[0]);
    const int n = a.order();
    std::vector<C> c;
    c.reserve(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) {
        C ck = a[0] * b[k];
        for (int j = 1; j <= k; ++j) ck = ck + a[j] * b[k - j];
        c.push_back(std::move(ck));
    }
    return Jet<C>(std::move(c));
}

/// b with jet_mul(a, b) == 1 to machine accuracy. Needs a nonzero constant term.
inline ScalarJet jet_reciprocal(const ScalarJet& a) {
    if (a[0] == 0.0) throw std::domain_error("jet_reciprocal: zero constant term");
    const int n = a.order();
    std::vector<double> b(static_cast<std::size_t>(n) + 1, 0.0);
    b[0] = 1.0 / a[0];
    for (int k = 1; k <= n; ++k) {
        double acc = 0.0;
        for (int j = 1; j <= k; ++j) acc += a[j] * b[static_cast<std::size_t>(k - j)];
        b[static_cast<std::size_t>(k)] = -acc / a[0];
    }
    return ScalarJet(std::move(b));
}

inline ScalarJet jet_exp(const ScalarJet& a) {
    const int n = a.order();
    std::vector<double> e(static_cast<std::size_t>(n) + 1, 0.0);
    e[0] = std::exp(a[0]);
    for (int k = 1; k <= n; ++k) {
        double acc = 0.0;
        for (int j = 1; j <= k; ++j) acc += j * a[j] * e[static_cast<std::size_t>(k - j)];
        e[static_cast<std::size_t>(k)] = acc / k;
    }
    return ScalarJet(std::move(e));
}

inline ScalarJet jet_log(const ScalarJet& a) {
    if (a[0] <= 0.0) throw std::domain_error("jet_log: nonpositive constant term");
    const int n = a.order();
    std::vector<double> l(static_cast<std::size_t>(n) + 1, 0.0);
    l[0] = std::log(a[0]);
    for (int k = 1; k <= n; ++k) {
        double acc = k * a[k];
        for (int j = 1; j < k; ++j) acc -= j * l[static_cast<std::size_t>(j)] * a[k - j];
        l[static_cast<std::size_t>(k)] = acc / (k * a[0]);
    }
    return ScalarJet(std::move(l));
}

/// f(inner) truncated, where outer[k] is the k-th Taylor coefficient of f
/// about inner's constant term (outer must have inner.order()+1 entries).
inline ScalarJet jet_compose_scalar(const std::vector<double>& outer, const ScalarJet& inner) {
    const int n = inner.order();
    if (static_cast<int>(outer.size()) != n + 1)
        throw std::invalid_argument("jet_compose_scalar: outer truncation order mismatch");
    ScalarJet shifted = inner;
    shifted[0] = 0.0;
    // Horner in the shifted jet; its zero constant term keeps powers truncation-exact.
    ScalarJet acc(n, 0.0);
    acc[0] = outer[static_cast<std::size_t>(n)];
    for (int k = n - 1; k >= 0; --k) {
        acc = jet_mul(acc, shifted);
        acc[0] += outer[static_cast<std::size_t>(k)];
    }
    return acc;
}

/// Division is multiplication by the reciprocal; one code path to verify.
inline ScalarJet jet_div(const ScalarJet& a, const ScalarJet& b) {
    return jet_mul(a, jet_reciprocal(b));
}

inline double jet_eval(const ScalarJet& a, double eps) {
    double acc = 0.0;
    for (int k = a.order(); k >= 0; --k) acc = a[k] + eps * acc;
    return acc;
}

}  // namespace perturbex
