// Truncated Laurent data with a rational leading exponent over Q(sqrt d).
// A series knows how many orders of itself are trustworthy; products and
// sums propagate the narrowest window.
#pragma once

#include <trapaudit/exactnum.hpp>

#include <vector>

namespace trapaudit {

struct ExpansionPointMismatch : TrapError {
    ExpansionPointMismatch() : TrapError("ExpansionPointMismatch", "series expanded at different points") {}
};
struct InsufficientTruncation : TrapError {
    InsufficientTruncation() : TrapError("InsufficientTruncation", "residue term outside verified window") {}
};
struct SeriesAlignError : TrapError {
    SeriesAlignError() : TrapError("SeriesAlignError", "sum of series with non-integer exponent gap") {}
};

// f(u) = sum_j c[j] * u^(expo + j); trusted through order expo + c.size() - 1
struct LaurentSeries {
    Rational expo;
    std::vector<QuadExt> c;

    int size() const { return static_cast<int>(c.size()); }

    const QuadExt& coeff_at_offset(int j) const { return c[static_cast<size_t>(j)]; }

    LaurentSeries trimmed_leading() const {
        LaurentSeries r = *this;
        size_t k = 0;
        while (k < r.c.size() && r.c[k].is_zero()) ++k;
        if (k > 0 && k < r.c.size()) {
            r.expo += Rational(static_cast<long long>(k));
            r.c.erase(r.c.begin(), r.c.begin() + static_cast<long>(k));
        }
        return r;
    }
};

inline LaurentSeries series_product(const LaurentSeries& f, const LaurentSeries& g) {
    int n = std::min(f.size(), g.size());
    LaurentSeries r;
    r.expo = f.expo + g.expo;
    r.c.assign(static_cast<size_t>(std::max(n, 0)), QuadExt());
    for (int k = 0; k < n; ++k) {
        QuadExt acc;
        for (int i = 0; i <= k; ++i) acc += f.c[static_cast<size_t>(i)] * g.c[static_cast<size_t>(k - i)];
        r.c[static_cast<size_t>(k)] = acc;
    }
    return r;
}

inline LaurentSeries series_sum(const LaurentSeries& f, const LaurentSeries& g) {
    Rational gap = g.expo - f.expo;
    if (!gap.is_integer()) throw SeriesAlignError();
    // order the pair so f starts first
    if (gap.is_negative()) return series_sum(g, f);
    long off = static_cast<long>(gap.num().convert_to<long long>());
    long hi_f = f.size();                 // exclusive offset bound relative to f.expo
    long hi_g = off + g.size();
    long hi = std::min(hi_f, hi_g);
    LaurentSeries r;
    r.expo = f.expo;
    r.c.assign(static_cast<size_t>(std::max<long>(hi, 0)), QuadExt());
    for (long j = 0; j < hi; ++j) {
        QuadExt v = j < hi_f ? f.c[static_cast<size_t>(j)] : QuadExt();
        if (j >= off && j - off < g.size()) v += g.c[static_cast<size_t>(j - off)];
        r.c[static_cast<size_t>(j)] = v;
    }
    return r;
}

inline LaurentSeries series_scale(const LaurentSeries& f, const QuadExt& s) {
    LaurentSeries r = f;
    for (auto& v : r.c) v *= s;
    return r;
}

// multiplicative inverse of a series with nonzero leading coefficient
inline LaurentSeries series_invert(const LaurentSeries& f, int order) {
    if (f.c.empty() || f.c[0].is_zero()) throw TrapError("SeriesInvert", "inverting series with zero lead");
    int n = std::min(order, f.size());
    LaurentSeries r;
    r.expo = -f.expo;
    r.c.assign(static_cast<size_t>(n), QuadExt());
    QuadExt lead_inv = f.c[0].inverse();
    r.c[0] = lead_inv;
    for (int k = 1; k < n; ++k) {
        QuadExt acc;
        for (int i = 1; i <= k; ++i) acc += f.c[static_cast<size_t>(i)] * r.c[static_cast<size_t>(k - i)];
        r.c[static_cast<size_t>(k)] = -(acc * lead_inv);
    }
    return r;
}

// coefficient of u^target if inside the window; zero when the window provably
// starts above it or the offset is non-integer
inline QuadExt series_coefficient(const LaurentSeries& f, const Rational& target) {
    Rational off = target - f.expo;
    if (!off.is_integer()) return QuadExt();
    if (off.is_negative()) return QuadExt();
    Int j = off.num();
    if (j >= f.size()) throw InsufficientTruncation();
    return f.c[j.convert_to<size_t>()];
}

inline QuadExt series_residue(const LaurentSeries& f) { return series_coefficient(f, Rational(-1)); }

inline LaurentSeries series_derivative(const LaurentSeries& f) {
    LaurentSeries r;
    r.expo = f.expo - Rational(1);
    r.c.resize(f.c.size());
    for (int k = 0; k < f.size(); ++k)
        r.c[static_cast<size_t>(k)] = f.c[static_cast<size_t>(k)] * (f.expo + Rational(k));
    return r;
}

}  // namespace trapaudit
