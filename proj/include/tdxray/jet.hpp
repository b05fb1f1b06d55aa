#pragma once

// Truncated multivariate Taylor polynomials ("jets").
//
// Jet<T, N, K> holds the coefficients c_a of sum_a c_a y^a over multi-indices a
// in N variables with |a| <= K. Arithmetic is exact up to degree K, which lets
// user-supplied conformal factors (written as templates over their scalar type)
// be expanded around a point without symbolic differentiation.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

namespace tdxray {

namespace jet_detail {

constexpr std::size_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::size_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * static_cast<std::size_t>(n - k + i) / static_cast<std::size_t>(i);
    return r;
}

template <int N, int K>
struct Layout {
    static constexpr std::size_t size = binomial(N + K, K);
    using Index = std::array<int, N>;

    std::vector<Index> multi;
    std::vector<int> degree;
    // Product table: (i, j, k) with multi[i] + multi[j] == multi[k].
    struct Term {
        std::size_t i, j, k;
    };
    std::vector<Term> products;
    // derivative[v][i] = index of multi[i] - e_v (or size if a_v == 0).
    std::array<std::vector<std::size_t>, N> lower;

    std::size_t find(const Index& a) const {
        for (std::size_t i = 0; i < multi.size(); ++i)
            if (multi[i] == a) return i;
        return size;
    }

    Layout() {
        // graded order: degree 0, then 1, ...
        for (int d = 0; d <= K; ++d) {
            Index a{};
            enumerate(a, 0, d, d);
        }
        for (std::size_t i = 0; i < size; ++i)
            for (std::size_t j = 0; j < size; ++j) {
                if (degree[i] + degree[j] > K) continue;
                Index s{};
                for (int v = 0; v < N; ++v) s[v] = multi[i][v] + multi[j][v];
                products.push_back({i, j, find(s)});
            }
        for (int v = 0; v < N; ++v) {
            lower[v].resize(size, size);
            for (std::size_t i = 0; i < size; ++i) {
                if (multi[i][v] == 0) continue;
                Index a = multi[i];
                --a[v];
                lower[v][i] = find(a);
            }
        }
    }

private:
    void enumerate(Index& a, int v, int remaining, int total) {
        if (v == N - 1) {
            a[v] = remaining;
            multi.push_back(a);
            degree.push_back(total);
            return;
        }
        for (int e = remaining; e >= 0; --e) {
            a[v] = e;
            enumerate(a, v + 1, remaining - e, total);
        }
    }
};

template <int N, int K>
const Layout<N, K>& layout() {
    static const Layout<N, K> l;
    return l;
}

}  // namespace jet_detail

template <class T, int N, int K>
class Jet {
public:
    static constexpr std::size_t size = jet_detail::Layout<N, K>::size;
    static constexpr int vars = N;
    static constexpr int order = K;
    using Index = std::array<int, N>;

    Jet() { c_.fill(T(0)); }
    Jet(const T& constant) {  // NOLINT: implicit promotion from scalars is intended
        c_.fill(T(0));
        c_[0] = constant;
    }
    template <class U>
        requires(!std::is_same_v<U, T> && std::is_arithmetic_v<U>)
    Jet(const U& constant) : Jet(T(constant)) {}

    /// value + y_v
    static Jet variable(int v, const T& value) {
        Jet j(value);
        if constexpr (K >= 1) j.c_[1 + static_cast<std::size_t>(v)] = T(1);
        return j;
    }

    const T& value() const { return c_[0]; }
    const T& operator[](std::size_t i) const { return c_[i]; }
    T& operator[](std::size_t i) { return c_[i]; }

    /// Coefficient of y^a (not the derivative).
    T coeff(const Index& a) const {
        std::size_t i = jet_detail::layout<N, K>().find(a);
        return i < size ? c_[i] : T(0);
    }
    void set_coeff(const Index& a, const T& v) {
        std::size_t i = jet_detail::layout<N, K>().find(a);
        if (i < size) c_[i] = v;
    }
    static const Index& multi_index(std::size_t i) { return jet_detail::layout<N, K>().multi[i]; }
    static int degree_of(std::size_t i) { return jet_detail::layout<N, K>().degree[i]; }

    /// d/dy_v; the top-degree part of the result is unknown and left at zero.
    Jet derivative(int v) const {
        const auto& l = jet_detail::layout<N, K>();
        Jet r;
        for (std::size_t i = 0; i < size; ++i) {
            std::size_t lo = l.lower[v][i];
            if (lo < size) r.c_[lo] += c_[i] * T(l.multi[i][v]);
        }
        return r;
    }

    /// Substitute y_v = 0.
    Jet restrict_zero(int v) const {
        const auto& l = jet_detail::layout<N, K>();
        Jet r;
        for (std::size_t i = 0; i < size; ++i)
            if (l.multi[i][v] == 0) r.c_[i] = c_[i];
        return r;
    }

    /// Drop every coefficient above degree d.
    Jet truncate(int d) const {
        Jet r;
        for (std::size_t i = 0; i < size; ++i)
            if (degree_of(i) <= d) r.c_[i] = c_[i];
        return r;
    }

    template <class Y>
    auto evaluate(const Y& y) const {
        using R = decltype(T() * y[0]);
        R acc(0);
        for (std::size_t i = 0; i < size; ++i) {
            R m = R(c_[i]);
            const auto& a = multi_index(i);
            for (int v = 0; v < N; ++v)
                for (int e = 0; e < a[v]; ++e) m *= y[v];
            acc += m;
        }
        return acc;
    }

    Jet& operator+=(const Jet& o) {
        for (std::size_t i = 0; i < size; ++i) c_[i] += o.c_[i];
        return *this;
    }
    Jet& operator-=(const Jet& o) {
        for (std::size_t i = 0; i < size; ++i) c_[i] -= o.c_[i];
        return *this;
    }
    Jet& operator*=(const Jet& o) { return *this = *this * o; }
    Jet& operator/=(const Jet& o) { return *this = *this / o; }

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator-(const Jet& a) {
        Jet r;
        for (std::size_t i = 0; i < size; ++i) r.c_[i] = -a.c_[i];
        return r;
    }
    friend Jet operator*(const Jet& a, const Jet& b) {
        Jet r;
        for (const auto& t : jet_detail::layout<N, K>().products) r.c_[t.k] += a.c_[t.i] * b.c_[t.j];
        return r;
    }
    friend Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }

    friend Jet operator+(Jet a, const T& s) { a.c_[0] += s; return a; }
    friend Jet operator+(const T& s, Jet a) { a.c_[0] += s; return a; }
    friend Jet operator-(Jet a, const T& s) { a.c_[0] -= s; return a; }
    friend Jet operator-(const T& s, const Jet& a) { return Jet(s) - a; }
    friend Jet operator*(Jet a, const T& s) {
        for (auto& v : a.c_) v *= s;
        return a;
    }
    friend Jet operator*(const T& s, Jet a) { return a * s; }
    friend Jet operator/(Jet a, const T& s) {
        for (auto& v : a.c_) v /= s;
        return a;
    }
    friend Jet operator/(const T& s, const Jet& a) { return reciprocal(a) * s; }

    /// g(a) from the Taylor coefficients g_k = g^{(k)}(a0)/k!, k = 0..K.
    friend Jet compose(const Jet& a, const std::array<T, K + 1>& g) {
        Jet shifted = a;
        shifted.c_[0] = T(0);
        Jet r(g[0]);
        Jet power(T(1));
        for (int k = 1; k <= K; ++k) {
            power = power * shifted;
            r += power * g[static_cast<std::size_t>(k)];
        }
        return r;
    }

    friend Jet reciprocal(const Jet& a) {
        std::array<T, K + 1> g;
        T inv = T(1) / a.c_[0];
        T p = inv;
        for (int k = 0; k <= K; ++k) {
            g[static_cast<std::size_t>(k)] = (k % 2 == 0 ? p : -p);
            p *= inv;
        }
        return compose(a, g);
    }
    friend Jet exp(const Jet& a) {
        using std::exp;
        std::array<T, K + 1> g;
        T e = exp(a.c_[0]);
        T fact = T(1);
        for (int k = 0; k <= K; ++k) {
            if (k > 0) fact *= T(k);
            g[static_cast<std::size_t>(k)] = e / fact;
        }
        return compose(a, g);
    }
    friend Jet pow(const Jet& a, double r) {
        using std::pow;
        std::array<T, K + 1> g;
        T coef = T(1);
        for (int k = 0; k <= K; ++k) {
            g[static_cast<std::size_t>(k)] = coef * pow(a.c_[0], T(r - k));
            coef *= T((r - k) / (k + 1));
        }
        return compose(a, g);
    }
    friend Jet sqrt(const Jet& a) { return pow(a, 0.5); }
    friend Jet log(const Jet& a) {
        using std::log;
        std::array<T, K + 1> g;
        g[0] = log(a.c_[0]);
        T inv = T(1) / a.c_[0];
        T p = inv;
        for (int k = 1; k <= K; ++k) {
            g[static_cast<std::size_t>(k)] = (k % 2 == 1 ? p : -p) / T(k);
            p *= inv;
        }
        return compose(a, g);
    }
    friend Jet sin(const Jet& a) {
        using std::cos;
        using std::sin;
        std::array<T, K + 1> g;
        T s = sin(a.c_[0]), c = cos(a.c_[0]);
        T fact = T(1);
        for (int k = 0; k <= K; ++k) {
            if (k > 0) fact *= T(k);
            T d = (k % 4 == 0) ? s : (k % 4 == 1) ? c : (k % 4 == 2) ? -s : -c;
            g[static_cast<std::size_t>(k)] = d / fact;
        }
        return compose(a, g);
    }
    friend Jet cos(const Jet& a) {
        using std::cos;
        using std::sin;
        std::array<T, K + 1> g;
        T s = sin(a.c_[0]), c = cos(a.c_[0]);
        T fact = T(1);
        for (int k = 0; k <= K; ++k) {
            if (k > 0) fact *= T(k);
            T d = (k % 4 == 0) ? c : (k % 4 == 1) ? -s : (k % 4 == 2) ? -c : s;
            g[static_cast<std::size_t>(k)] = d / fact;
        }
        return compose(a, g);
    }

private:
    std::array<T, size> c_;
};

/// Constant part of a scalar or jet; lets templated user code branch on values.
inline double scalar_value(double v) { return v; }
template <class T, int N, int K>
T scalar_value(const Jet<T, N, K>& j) {
    return j.value();
}

}  // namespace tdxray
