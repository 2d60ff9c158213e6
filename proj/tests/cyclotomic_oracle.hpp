// Test-side independence oracle for {1, cos(pi r1), cos(pi r2)}: exact
// linear algebra in the cyclotomic field Q(zeta_2N). Kept independent of the
// denominator criterion it cross-checks.
#pragma once

#include <trapaudit/rational.hpp>

#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace trapaudit::testing {

using Poly = std::vector<Int>;  // ascending integer coefficients

inline void poly_trim(Poly& p) {
    while (!p.empty() && p.back() == 0) p.pop_back();
}

inline Poly poly_divide_monic(Poly num, const Poly& den) {
    Poly q(num.size() >= den.size() ? num.size() - den.size() + 1 : 0, Int(0));
    for (long i = static_cast<long>(num.size()) - 1; i >= static_cast<long>(den.size()) - 1; --i) {
        Int c = num[static_cast<size_t>(i)];
        if (c == 0) continue;
        long shift = i - static_cast<long>(den.size()) + 1;
        q[static_cast<size_t>(shift)] = c;
        for (size_t j = 0; j < den.size(); ++j) num[static_cast<size_t>(shift) + j] -= c * den[j];
    }
    poly_trim(num);
    if (!num.empty()) throw std::logic_error("cyclotomic division not exact");
    return q;
}

inline const Poly& cyclotomic(int n) {
    static std::map<int, Poly> memo;
    auto it = memo.find(n);
    if (it != memo.end()) return it->second;
    Poly p(static_cast<size_t>(n) + 1, Int(0));
    p[0] = -1;
    p[static_cast<size_t>(n)] = 1;
    for (int d = 1; d < n; ++d)
        if (n % d == 0) p = poly_divide_monic(std::move(p), cyclotomic(d));
    return memo.emplace(n, std::move(p)).first->second;
}

inline std::vector<Rational> power_mod_cyclotomic(int e, int M) {
    const Poly& phi = cyclotomic(M);
    size_t deg = phi.size() - 1;
    std::vector<Int> cur(deg, Int(0));
    if (static_cast<size_t>(e) < deg) {
        cur[static_cast<size_t>(e)] = 1;
    } else {
        cur[0] = 1;
        for (int i = 0; i < e; ++i) {
            Int top = cur[deg - 1];
            for (size_t j = deg - 1; j > 0; --j) cur[j] = cur[j - 1];
            cur[0] = 0;
            if (top != 0)
                for (size_t j = 0; j < deg; ++j) cur[j] -= top * phi[j];
        }
    }
    std::vector<Rational> out(deg);
    for (size_t j = 0; j < deg; ++j) out[j] = Rational(cur[j]);
    return out;
}

inline std::vector<Rational> cos_vector(long p, long q, int M) {
    long e = (p % (2 * static_cast<long>(M))) * (M / (2 * q)) % M;
    if (e < 0) e += M;
    auto v1 = power_mod_cyclotomic(static_cast<int>(e), M);
    auto v2 = power_mod_cyclotomic(static_cast<int>((M - e) % M), M);
    for (size_t j = 0; j < v1.size(); ++j) v1[j] = (v1[j] + v2[j]) / Rational(2);
    return v1;
}

inline int rank_of(std::vector<std::vector<Rational>> rows) {
    int rank = 0;
    size_t cols = rows.empty() ? 0 : rows[0].size();
    size_t lead = 0;
    for (size_t r = 0; r < rows.size() && lead < cols; ++r) {
        size_t pivot = r;
        while (pivot < rows.size() && lead < cols) {
            bool found = false;
            for (size_t rr = r; rr < rows.size(); ++rr)
                if (!rows[rr][lead].is_zero()) {
                    pivot = rr;
                    found = true;
                    break;
                }
            if (found) break;
            ++lead;
        }
        if (lead >= cols) break;
        std::swap(rows[r], rows[pivot]);
        for (size_t rr = r + 1; rr < rows.size(); ++rr) {
            if (rows[rr][lead].is_zero()) continue;
            Rational f = rows[rr][lead] / rows[r][lead];
            for (size_t cc = lead; cc < cols; ++cc) rows[rr][cc] -= f * rows[r][cc];
        }
        ++rank;
        ++lead;
    }
    return rank;
}

inline bool oracle_independent(const Rational& r1, const Rational& r2) {
    long q1 = r1.den().convert_to<long>(), q2 = r2.den().convert_to<long>();
    long p1 = r1.num().convert_to<long>(), p2 = r2.num().convert_to<long>();
    int M = static_cast<int>(2 * std::lcm(q1, q2));
    size_t deg = cyclotomic(M).size() - 1;
    std::vector<Rational> one(deg, Rational(0));
    one[0] = Rational(1);
    return rank_of({one, cos_vector(p1, q1, M), cos_vector(p2, q2, M)}) == 3;
}

}  // namespace trapaudit::testing
