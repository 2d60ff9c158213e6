// Local analysis of second-order linear ODEs xi'' + a(z) xi' + b(z) xi = 0
// with a, b in exact partial-fraction form: indicial exponents, Frobenius
// expansions, monodromy-trace data, residues. The point at infinity is
// handled internally through w = 1/z.
#pragma once

#include <trapaudit/series.hpp>

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

namespace trapaudit {

struct IrregularSingularPoint : TrapError {
    explicit IrregularSingularPoint(const std::string& where)
        : TrapError("IrregularSingularPoint", "irregular singular point at " + where) {}
};
struct ResonantCase : TrapError {
    long gap;
    explicit ResonantCase(long g)
        : TrapError("ResonantCase", "indicial roots differ by integer " + std::to_string(g)), gap(g) {}
};
struct IrrationalLocalData : TrapError {
    IrrationalLocalData() : TrapError("IrrationalLocalData", "indicial data not rational") {}
};

struct SingPoint {
    bool at_infinity = false;
    QuadExt z;

    static SingPoint infinity() { return {true, QuadExt()}; }
    static SingPoint at(QuadExt p) { return {false, std::move(p)}; }

    friend bool operator==(const SingPoint& a, const SingPoint& b) {
        if (a.at_infinity != b.at_infinity) return false;
        return a.at_infinity || a.z == b.z;
    }
    friend bool operator!=(const SingPoint& a, const SingPoint& b) { return !(a == b); }

    std::string str() const { return at_infinity ? "inf" : z.str(); }
};

struct PFTerm {
    QuadExt pole;
    int order = 1;  // >= 1
    QuadExt coeff;
};

struct PartialFraction {
    std::vector<PFTerm> terms;
    std::vector<std::pair<int, QuadExt>> poly;  // (power, coefficient), power >= 0

    // exact evaluation away from the poles
    QuadExt eval(const QuadExt& z) const {
        QuadExt v;
        for (const auto& t : terms) {
            QuadExt den = z - t.pole;
            QuadExt p(Rational(1));
            for (int i = 0; i < t.order; ++i) p *= den;
            v += t.coeff / p;
        }
        for (const auto& [m, c] : poly) {
            QuadExt p(Rational(1));
            for (int i = 0; i < m; ++i) p *= z;
            v += c * p;
        }
        return v;
    }
};

struct FuchsODE {
    PartialFraction a, b;

    std::vector<SingPoint> singular_points() const {
        std::vector<SingPoint> pts;
        auto push = [&](const QuadExt& p) {
            SingPoint s = SingPoint::at(p);
            if (std::find(pts.begin(), pts.end(), s) == pts.end()) pts.push_back(s);
        };
        for (const auto& t : a.terms) push(t.pole);
        for (const auto& t : b.terms) push(t.pole);
        pts.push_back(SingPoint::infinity());
        return pts;
    }
};

// power-series data of u*a and u^2*b in the local coordinate u
struct LocalData {
    std::vector<QuadExt> A, B;  // length = order
};

namespace detail {

// accumulate c/(delta+u)^k = sum_j e_j u^j into dst starting at dst[base]
inline void accumulate_shifted_pole(std::vector<QuadExt>& dst, int base, const QuadExt& coeff, int k,
                                    const QuadExt& delta) {
    QuadExt dinv = QuadExt(Rational(1)) / delta;
    QuadExt e = coeff;
    for (int i = 0; i < k; ++i) e *= dinv;  // e_0 = c / delta^k
    long j = 0;
    for (int idx = base; idx < static_cast<int>(dst.size()); ++idx, ++j) {
        dst[static_cast<size_t>(idx)] += e;
        e *= Rational(-(k + j)) * Rational(1, j + 1) * dinv;
    }
}

// accumulate c * (z0+u)^m into dst starting at dst[base]
inline void accumulate_poly(std::vector<QuadExt>& dst, int base, const QuadExt& coeff, int m,
                            const QuadExt& z0) {
    for (int i = 0; i <= m; ++i) {
        int idx = base + i;
        if (idx < 0 || idx >= static_cast<int>(dst.size())) continue;
        QuadExt ci = coeff;  // C(m,i) z0^(m-i)
        for (int t = 0; t < i; ++t) ci *= Rational(m - t) * Rational(1, t + 1);
        bool vanish = false;
        for (int t = 0; t < m - i; ++t) {
            if (z0.is_zero()) { vanish = true; break; }
            ci *= z0;
        }
        if (!vanish) dst[static_cast<size_t>(idx)] += ci;
    }
}

// accumulate c * w^(k-1+j) * C(k+j-1,j) s^j (the 1/(1-s w)^k expansion) into dst
inline void accumulate_inf_pole(std::vector<QuadExt>& dst, int base_power, const QuadExt& coeff, int k,
                                const QuadExt& s) {
    QuadExt e = coeff;
    long j = 0;
    for (int idx = base_power; idx < static_cast<int>(dst.size()); ++idx, ++j) {
        if (idx >= 0) dst[static_cast<size_t>(idx)] += e;
        e *= Rational(k + j) * Rational(1, j + 1) * s;
    }
}

}  // namespace detail

inline LocalData local_data(const FuchsODE& ode, const SingPoint& point, int order) {
    LocalData L;
    L.A.assign(static_cast<size_t>(order), QuadExt());
    L.B.assign(static_cast<size_t>(order), QuadExt());
    if (!point.at_infinity) {
        const QuadExt& z0 = point.z;
        for (const auto& t : ode.a.terms) {
            if (t.pole == z0) {
                if (t.order > 1) throw IrregularSingularPoint(point.str());
                L.A[0] += t.coeff;  // u * c/u
            } else {
                detail::accumulate_shifted_pole(L.A, 1, t.coeff, t.order, z0 - t.pole);
            }
        }
        for (const auto& [m, c] : ode.a.poly) detail::accumulate_poly(L.A, 1, c, m, z0);
        for (const auto& t : ode.b.terms) {
            if (t.pole == z0) {
                if (t.order > 2) throw IrregularSingularPoint(point.str());
                size_t idx = static_cast<size_t>(2 - t.order);
                if (idx < L.B.size()) L.B[idx] += t.coeff;
            } else {
                detail::accumulate_shifted_pole(L.B, 2, t.coeff, t.order, z0 - t.pole);
            }
        }
        for (const auto& [m, c] : ode.b.poly) detail::accumulate_poly(L.B, 2, c, m, z0);
        return L;
    }
    // w = 1/z:  A(w) = 2 - a(1/w)/w,  B(w) = b(1/w)/w^2
    if (!ode.a.poly.empty() || !ode.b.poly.empty()) throw IrregularSingularPoint("inf");
    L.A[0] = QuadExt(Rational(2));
    for (const auto& t : ode.a.terms) {
        // subtract c * w^(k-1) / (1-s w)^k
        std::vector<QuadExt> tmp(L.A.size(), QuadExt());
        detail::accumulate_inf_pole(tmp, t.order - 1, t.coeff, t.order, t.pole);
        for (size_t i = 0; i < tmp.size(); ++i) L.A[i] -= tmp[i];
    }
    QuadExt neg_power_total;  // w^-1 coefficient of b(1/w)/w^2; must cancel
    for (const auto& t : ode.b.terms) {
        if (t.order == 1) neg_power_total += t.coeff;
        std::vector<QuadExt> tmp(L.B.size() + 1, QuadExt());  // index 0 <-> w^-1
        detail::accumulate_inf_pole(tmp, t.order - 1, t.coeff, t.order, t.pole);
        for (size_t i = 1; i < tmp.size(); ++i) L.B[i - 1] += tmp[i];
    }
    if (!neg_power_total.is_zero()) throw IrregularSingularPoint("inf");
    return L;
}

// indicial polynomial f(x) = x(x-1) + A0 x + B0, exact rational data required
struct IndicialData {
    Rational A0, B0;
    Rational discriminant;  // (A0-1)^2 - 4 B0

    Rational eval(const Rational& x) const { return x * (x - Rational(1)) + A0 * x + B0; }
};

inline IndicialData indicial_data(const FuchsODE& ode, const SingPoint& point) {
    LocalData L = local_data(ode, point, 1);
    if (!L.A[0].is_rational() || !L.B[0].is_rational()) throw IrrationalLocalData();
    IndicialData d;
    d.A0 = L.A[0].rat();
    d.B0 = L.B[0].rat();
    Rational am1 = d.A0 - Rational(1);
    d.discriminant = am1 * am1 - Rational(4) * d.B0;
    return d;
}

// both roots of the indicial equation, "+" branch first
inline std::pair<QuadExt, QuadExt> indicial_exponents(const FuchsODE& ode, const SingPoint& point) {
    IndicialData d = indicial_data(ode, point);
    Rational base = (Rational(1) - d.A0) / Rational(2);
    QuadExt plus(base, Rational(1, 2), d.discriminant);
    QuadExt minus(base, Rational(-1, 2), d.discriminant);
    return {plus, minus};
}

struct FrobeniusSeries {
    SingPoint point;
    LaurentSeries series;  // expo = the indicial exponent, c[0] = 1 unless rescaled

    Rational exponent() const { return series.expo; }
    int truncation_order() const { return series.size(); }
};

inline FrobeniusSeries frobenius_expand(const FuchsODE& ode, const SingPoint& point,
                                        const Rational& exponent, int order) {
    LocalData L = local_data(ode, point, order);
    if (!L.A[0].is_rational() || !L.B[0].is_rational()) throw IrrationalLocalData();
    IndicialData ind;
    ind.A0 = L.A[0].rat();
    ind.B0 = L.B[0].rat();
    if (!ind.eval(exponent).is_zero())
        throw PreconditionViolation("frobenius_expand: exponent is not an indicial root at " + point.str());
    Rational other = Rational(1) - ind.A0 - exponent;
    Rational gap = other - exponent;
    if (gap.is_integer() && gap > Rational(0)) throw ResonantCase(gap.num().convert_to<long>());

    FrobeniusSeries out;
    out.point = point;
    out.series.expo = exponent;
    out.series.c.assign(static_cast<size_t>(order), QuadExt());
    out.series.c[0] = QuadExt(Rational(1));
    for (int n = 1; n < order; ++n) {
        QuadExt acc;
        for (int j = 1; j <= n; ++j) {
            QuadExt factor = L.A[static_cast<size_t>(j)] * (exponent + Rational(n - j)) + L.B[static_cast<size_t>(j)];
            acc += factor * out.series.c[static_cast<size_t>(n - j)];
        }
        Rational fn = ind.eval(exponent + Rational(n));
        out.series.c[static_cast<size_t>(n)] = -(acc * QuadExt(Rational(1) / fn));
    }
    return out;
}

// residual u^2 xi'' + u A(u) xi' ... : coefficients of (xi'' + a xi' + b xi) * u^(2-lambda),
// trustworthy through the returned window; all-zero certifies the expansion
inline LaurentSeries frobenius_defect(const FuchsODE& ode, const FrobeniusSeries& xi) {
    int n = xi.series.size();
    LocalData L = local_data(ode, xi.point, n);
    LaurentSeries d2, d1, d0, As, Bs;
    d2.expo = d1.expo = d0.expo = Rational(0);
    d0.c = xi.series.c;
    d1.c.resize(d0.c.size());
    d2.c.resize(d0.c.size());
    for (int k = 0; k < n; ++k) {
        Rational e = xi.series.expo + Rational(k);
        d1.c[static_cast<size_t>(k)] = xi.series.c[static_cast<size_t>(k)] * e;
        d2.c[static_cast<size_t>(k)] = xi.series.c[static_cast<size_t>(k)] * e * (e - Rational(1));
    }
    As.expo = Bs.expo = Rational(0);
    As.c = L.A;
    Bs.c = L.B;
    return series_sum(d2, series_sum(series_product(As, d1), series_product(Bs, d0)));
}

// --------------------------------------------------------------------------
// Monodromy-trace data per singular point.
// --------------------------------------------------------------------------

enum class CosExactness { RationalValue, AlgebraicIrrational, IrrationalAngle };

struct TracePoint {
    SingPoint point;
    Rational delta_squared;
    SqrtClass delta;              // sqrt((A0-1)^2 - 4 B0)
    int sign;                     // -2 at finite points, +2 at infinity
    CosExactness exactness;
    std::optional<Rational> angle;  // delta as a rational multiple of pi
    std::optional<Rational> value;  // exact t when the cosine is rational
};

struct TraceData {
    std::vector<TracePoint> points;

    const TracePoint& at(const SingPoint& p) const {
        for (const auto& t : points)
            if (t.point == p) return t;
        throw TrapError("TracePoint", "no trace data at " + p.str());
    }
};

inline TraceData trace_data(const FuchsODE& ode) {
    TraceData out;
    for (const auto& p : ode.singular_points()) {
        IndicialData d = indicial_data(ode, p);
        TracePoint t;
        t.point = p;
        t.delta_squared = d.discriminant;
        t.delta = sqrt_classify(d.discriminant);
        t.sign = p.at_infinity ? 2 : -2;
        if (t.delta.kind == SqrtKind::RationalValue) {
            t.angle = t.delta.value;
            auto cosv = rational_cos_pi(t.delta.value);
            if (cosv) {
                t.exactness = CosExactness::RationalValue;
                t.value = Rational(t.sign) * (*cosv);
            } else {
                t.exactness = CosExactness::AlgebraicIrrational;
            }
        } else {
            t.exactness = CosExactness::IrrationalAngle;
        }
        out.points.push_back(std::move(t));
    }
    return out;
}

// --------------------------------------------------------------------------
// Point-tagged series algebra.
// --------------------------------------------------------------------------

inline FrobeniusSeries series_mul(const FrobeniusSeries& s1, const FrobeniusSeries& s2) {
    if (s1.point != s2.point) throw ExpansionPointMismatch();
    FrobeniusSeries r;
    r.point = s1.point;
    r.series = series_product(s1.series, s2.series);
    return r;
}

inline QuadExt residue_at(const FrobeniusSeries& s, const SingPoint& point) {
    if (s.point != point) throw ExpansionPointMismatch();
    return series_residue(s.series);
}

inline std::string series_str(const FrobeniusSeries& s, const std::string& var = "z") {
    std::string u = s.point.at_infinity ? "1/" + var : "(" + var + "-" + s.point.z.str() + ")";
    std::string out = u + "^(" + s.series.expo.str() + ") * [";
    for (int k = 0; k < s.series.size(); ++k) {
        if (k) out += " + ";
        out += s.series.c[static_cast<size_t>(k)].str();
        if (k) out += "*" + u + (k > 1 ? "^" + std::to_string(k) : "");
    }
    return out + "]";
}

}  // namespace trapaudit
