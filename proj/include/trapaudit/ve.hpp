// Everything derived from the trap Hamiltonian
//   H = (p_r^2 + p_z^2)/2 + A r^2 + B z^2 + C z^3 + D r^2 z + E z^4 + F r^2 z^2 + G r^4:
// the variational equations along the invariant manifold r = p_r = 0, their
// partial-fraction normal form, the second-variation sources and residues,
// and the elliptic / confluent reductions of the degenerate branches.
#pragma once

#include <trapaudit/fuchsian.hpp>

#include <array>
#include <optional>

namespace trapaudit {

struct DegenerateBranch : TrapError {
    std::string which;
    explicit DegenerateBranch(std::string w)
        : TrapError("DegenerateBranch", "degenerate branch: " + w), which(std::move(w)) {}
};
struct BranchMismatch : TrapError {
    explicit BranchMismatch(const std::string& m) : TrapError("BranchMismatch", m) {}
};
struct EllipticDegenerate : TrapError {
    EllipticDegenerate() : TrapError("EllipticDegenerate", "g2^3 - 27 g3^2 = 0") {}
};

struct TrapParams {
    Rational A, B, C, D, E, F, G;
    Rational h;  // energy constant of the invariant-manifold motion

    TrapParams() = default;
    TrapParams(Rational a, Rational b, Rational c, Rational d, Rational e, Rational f, Rational g,
               Rational hh = Rational(0))
        : A(std::move(a)), B(std::move(b)), C(std::move(c)), D(std::move(d)), E(std::move(e)),
          F(std::move(f)), G(std::move(g)), h(std::move(hh)) {}
};

struct DerivedQuantities {
    SqrtClass q;  // sqrt(A/B)
    SqrtClass p;  // sqrt(1 + 4F/E)
    Rational q_squared, p_squared;
    Rational disc;  // C^2 - 4BE
    QuadExt z1, z2;
    QuadExt alpha, beta, gamma;  // residues of b(z) at 0, z1, z2
    Rational a0, b0, a_inf, b_inf;
};

inline DerivedQuantities derive(const TrapParams& t) {
    if (t.B.is_zero()) throw DegenerateBranch("B=0");
    if (t.E.is_zero()) throw DegenerateBranch("E=0");
    DerivedQuantities d;
    d.q_squared = t.A / t.B;
    d.p_squared = Rational(1) + Rational(4) * t.F / t.E;
    d.q = sqrt_classify(d.q_squared);
    d.p = sqrt_classify(d.p_squared);
    d.disc = t.C * t.C - Rational(4) * t.B * t.E;
    if (d.disc.is_zero()) throw DegenerateBranch("z1=z2");
    Rational inv2E = Rational(1) / (Rational(2) * t.E);
    d.z1 = QuadExt(-t.C * inv2E, inv2E, d.disc);
    d.z2 = QuadExt(-t.C * inv2E, -inv2E, d.disc);
    // alpha is the true 1/z residue of b(z); the displayed normal form carries
    // the opposite sign on the D/B term (surfaced as a report warning)
    d.alpha = QuadExt((t.A * t.C - t.D * t.B) / (t.B * t.B));
    QuadExt dz = d.z1 - d.z2;
    auto num = [&](const QuadExt& z) { return QuadExt(t.F) * z * z + QuadExt(t.D) * z + QuadExt(t.A); };
    d.beta = -(num(d.z1)) / (QuadExt(t.E) * d.z1 * d.z1 * dz);
    d.gamma = num(d.z2) / (QuadExt(t.E) * d.z2 * d.z2 * dz);
    d.a0 = Rational(1);
    d.b0 = -d.q_squared;
    d.a_inf = Rational(2);
    d.b_inf = (Rational(1) - d.p_squared) / Rational(4);
    return d;
}

// xi'' + a(z) xi' + b(z) xi = 0 with
//   a = 1/z + (1/2)/(z-z1) + (1/2)/(z-z2)
//   b = -q^2/z^2 + alpha/z + beta/(z-z1) + gamma/(z-z2)
inline FuchsODE build_nve(const TrapParams& t) {
    DerivedQuantities d = derive(t);
    FuchsODE ode;
    ode.a.terms = {{QuadExt(), 1, QuadExt(Rational(1))},
                   {d.z1, 1, QuadExt(Rational(1, 2))},
                   {d.z2, 1, QuadExt(Rational(1, 2))}};
    ode.b.terms = {{QuadExt(), 2, QuadExt(d.b0)},
                   {QuadExt(), 1, d.alpha},
                   {d.z1, 1, d.beta},
                   {d.z2, 1, d.gamma}};
    return ode;
}

// the companion first-variation equation for the z-direction field,
// b2 = -(B + 3Cz + 6Ez^2)/(z^2 (Ez^2+Cz+B))
inline FuchsODE build_ve_tangent(const TrapParams& t) {
    DerivedQuantities d = derive(t);
    FuchsODE ode;
    ode.a.terms = {{QuadExt(), 1, QuadExt(Rational(1))},
                   {d.z1, 1, QuadExt(Rational(1, 2))},
                   {d.z2, 1, QuadExt(Rational(1, 2))}};
    auto num = [&](const QuadExt& z) {
        return QuadExt(t.B) + QuadExt(Rational(3) * t.C) * z + QuadExt(Rational(6) * t.E) * z * z;
    };
    QuadExt dz = d.z1 - d.z2;
    QuadExt beta2 = -(num(d.z1)) / (QuadExt(t.E) * d.z1 * d.z1 * dz);
    QuadExt gamma2 = num(d.z2) / (QuadExt(t.E) * d.z2 * d.z2 * dz);
    ode.b.terms = {{QuadExt(), 2, QuadExt(Rational(-1))},
                   {QuadExt(), 1, QuadExt(Rational(-2) * t.C / t.B)},
                   {d.z1, 1, beta2},
                   {d.z2, 1, gamma2}};
    return ode;
}

// --------------------------------------------------------------------------
// Second variation: sources, kernels, residues.
// --------------------------------------------------------------------------

// polynomial quotient num(z)/den(z), both in ascending coefficients
struct RationalFunction {
    std::vector<Rational> num, den;

    std::string str(const std::string& var = "z") const {
        auto poly = [&](const std::vector<Rational>& p) {
            std::string s;
            for (size_t i = 0; i < p.size(); ++i) {
                if (p[i].is_zero()) continue;
                if (!s.empty()) s += "+";
                s += p[i].str();
                if (i >= 1) s += "*" + var;
                if (i >= 2) s += "^" + std::to_string(i);
            }
            return s.empty() ? std::string("0") : s;
        };
        return "(" + poly(num) + ")/(" + poly(den) + ")";
    }
};

struct Ve2Data {
    RationalFunction k2_1;         // (2Fz + D)/(z^2 (Ez^2+Cz+B)), drives xi11*xi12
    RationalFunction k2_2_first;   // (2Fz + D)/(z^2 (Ez^2+Cz+B)), drives xi11^2
    RationalFunction k2_2_second;  // (12Ez + 3C)/(z^2 (Ez^2+Cz+B)), drives xi12^2
    // per-pole leading Laurent datum of the residue kernel in display form
    QuadExt kernel_lead_z1, kernel_lead_z2;
    std::array<Rational, 4> wronskian_constants;  // c1, c2, l1, l2
    // which local solutions multiply which source (fixed product structure)
    std::string product_structure;
};

inline Ve2Data ve2_sources(const TrapParams& t) {
    DerivedQuantities d = derive(t);
    Ve2Data v;
    std::vector<Rational> den = {Rational(0), Rational(0), t.B, t.C, t.E};  // z^2 (E z^2 + C z + B)
    v.k2_1 = {{t.D, Rational(2) * t.F}, den};
    v.k2_2_first = {{t.D, Rational(2) * t.F}, den};
    v.k2_2_second = {{Rational(3) * t.C, Rational(12) * t.E}, den};
    // both poles reported in the (z1 - z2) orientation
    auto lead = [&](const QuadExt& zi) {
        return (QuadExt(t.F) * zi + QuadExt(t.D)) / (QuadExt(t.E) * zi * zi * (d.z1 - d.z2));
    };
    v.kernel_lead_z1 = lead(d.z1);
    v.kernel_lead_z2 = lead(d.z2);
    v.wronskian_constants = {Rational(2), Rational(1), Rational(2), Rational(1)};
    v.product_structure = "xi11 := xi11^(2), xi12 := xi12^(1); residues of the products "
                          "(K1*xi11^(2), K1*xi11^(1), K2*xi12^(2), K2*xi12^(1))";
    return v;
}

// paper-display closed form ((p^2-1)/4 z_i + D/E)/(z_i^2 (z1 - z2)),
// evaluated as (F z_i + D)/(E z_i^2 (z1 - z2)) so it is defined for all E != 0
inline QuadExt closed_form_residue(const TrapParams& t, int i) {
    DerivedQuantities d = derive(t);
    const QuadExt& zi = i == 1 ? d.z1 : d.z2;
    return (QuadExt(t.F) * zi + QuadExt(t.D)) / (QuadExt(t.E) * zi * zi * (d.z1 - d.z2));
}

namespace detail {

// Laurent expansion at z_i of num(z)/(z^2 (Ez^2+Cz+B)): a simple pole
inline LaurentSeries kernel_laurent(const TrapParams& t, const DerivedQuantities& d, int which,
                                    const Rational& n0, const Rational& n1, int order) {
    const QuadExt& zi = which == 1 ? d.z1 : d.z2;
    const QuadExt& zj = which == 1 ? d.z2 : d.z1;
    LaurentSeries num;
    num.expo = Rational(0);
    num.c = {QuadExt(n1) * zi + QuadExt(n0), QuadExt(n1)};
    num.c.resize(static_cast<size_t>(order), QuadExt());
    // G(u) = E (z_i+u)^2 (u + z_i - z_j)
    QuadExt delta = zi - zj;
    LaurentSeries G;
    G.expo = Rational(0);
    G.c = {QuadExt(t.E) * zi * zi * delta,
           QuadExt(t.E) * (zi * zi + Rational(2) * zi * delta),
           QuadExt(t.E) * (Rational(2) * zi + delta),
           QuadExt(t.E)};
    G.c.resize(static_cast<size_t>(order), QuadExt());
    LaurentSeries k = series_product(num, series_invert(G, order));
    k.expo -= Rational(1);  // the 1/(z - z_i) factor
    return k;
}

}  // namespace detail

// Residues at z_i (i = 1 or 2) of the four second-variation component
// products, assembled from Frobenius solutions with c0 = 1 and reported in
// the (z1 - z2) orientation at both poles. Values follow the displayed
// residue kernel (F z + D); `derived_kernel` switches to the directly
// derived source (2F z + D).
inline std::array<QuadExt, 4> ve2_residues(const TrapParams& t, int i, bool derived_kernel = false,
                                           int order = 12) {
    DerivedQuantities d = derive(t);
    FuchsODE nve = build_nve(t);
    FuchsODE tangent = build_ve_tangent(t);
    SingPoint pt = SingPoint::at(i == 1 ? d.z1 : d.z2);
    Rational ori = i == 1 ? Rational(1) : Rational(-1);
    Rational kn0 = t.D;
    Rational kn1 = derived_kernel ? Rational(2) * t.F : t.F;

    for (int attempt = 0; attempt < 3; ++attempt, order *= 2) {
        try {
            FrobeniusSeries u1 = frobenius_expand(nve, pt, Rational(1, 2), order);
            FrobeniusSeries u2 = frobenius_expand(nve, pt, Rational(0), order);
            FrobeniusSeries v1 = frobenius_expand(tangent, pt, Rational(1, 2), order);
            FrobeniusSeries v2 = frobenius_expand(tangent, pt, Rational(0), order);
            LaurentSeries k1 = detail::kernel_laurent(t, d, i, kn0, kn1, order);
            LaurentSeries kL = detail::kernel_laurent(t, d, i, Rational(3) * t.C, Rational(12) * t.E, order);

            LaurentSeries src1 = series_product(k1, series_product(u2.series, v1.series));  // K2^(1)
            LaurentSeries src2 = series_sum(series_product(k1, series_product(u2.series, u2.series)),
                                            series_product(kL, series_product(v1.series, v1.series)));
            std::array<QuadExt, 4> r;
            r[0] = series_residue(series_product(src1, u2.series));
            r[1] = series_residue(series_product(src1, u1.series));
            r[2] = series_residue(series_product(src2, v2.series));
            r[3] = series_residue(series_product(src2, v1.series));
            for (auto& x : r) x *= QuadExt(ori);
            return r;
        } catch (const InsufficientTruncation&) {
            if (attempt == 2) throw;
        }
    }
    throw InsufficientTruncation();
}

// --------------------------------------------------------------------------
// Weierstrass p-function as a formal Laurent series.
// --------------------------------------------------------------------------

// p(t) = t^-2 + sum_{k>=2} c_k t^(2k-2), c_2 = g2/20, c_3 = g3/28,
// c_k = 3 / ((2k+1)(k-3)) * sum_{m=2}^{k-2} c_m c_{k-m}
inline LaurentSeries weierstrass_series(const Rational& g2, const Rational& g3, int order) {
    if (order < 4) throw PreconditionViolation("weierstrass_series: order >= 4");
    std::vector<Rational> ck(static_cast<size_t>(order / 2 + 3), Rational(0));
    if (ck.size() > 2) ck[2] = g2 / Rational(20);
    if (ck.size() > 3) ck[3] = g3 / Rational(28);
    for (size_t k = 4; k < ck.size(); ++k) {
        Rational acc(0);
        for (size_t m = 2; m + 2 <= k; ++m) acc += ck[m] * ck[k - m];
        ck[k] = Rational(3) * acc / Rational((2 * static_cast<long long>(k) + 1) * (static_cast<long long>(k) - 3));
    }
    LaurentSeries s;
    s.expo = Rational(-2);
    s.c.assign(static_cast<size_t>(order), QuadExt());
    s.c[0] = QuadExt(Rational(1));
    for (size_t k = 2; k < ck.size(); ++k) {
        size_t off = 2 * k;  // t^(2k-2) sits at offset 2k from t^-2
        if (off < s.c.size()) s.c[off] = QuadExt(ck[k]);
    }
    return s;
}

// --------------------------------------------------------------------------
// Lame branch (E = F = 0): elliptic data, P(alpha,h) coefficients, and the
// n = 3 second-variation residue at t = 0.
// --------------------------------------------------------------------------

struct LameData {
    std::optional<Rational> n;  // solution of n(n+1) = 4D/C, when rational
    Rational g2, g3;
    Rational a1, a2, b1, b2, c1, c2, d1, d2;
    LaurentSeries wp;
};

inline LameData lame_reduce(const TrapParams& t, const Rational& h) {
    if (!t.E.is_zero() || !t.F.is_zero()) throw BranchMismatch("lame_reduce needs E = F = 0");
    if (t.C.is_zero()) throw BranchMismatch("lame_reduce needs C != 0");
    if (t.B.is_zero()) throw BranchMismatch("lame_reduce needs B != 0");
    if (t.D.is_zero()) throw DegenerateBranch("D=0");
    LameData L;
    L.g2 = Rational(4) * t.B * t.B / Rational(9);
    L.g3 = -(t.B * t.B * t.B) / Rational(18) - t.C * t.C * h / Rational(4);
    Rational deltaE = L.g2 * L.g2 * L.g2 - Rational(27) * L.g3 * L.g3;
    if (deltaE.is_zero()) throw EllipticDegenerate();
    Rational K = Rational(4) * t.D / t.C;  // n(n+1)
    L.a1 = Rational(4) / K;
    L.a2 = Rational(0);
    L.b1 = Rational(-3) * t.B + Rational(6) * t.A / K;
    L.b2 = Rational(0);
    L.c1 = Rational(11, 36) * K * t.B * t.B + Rational(3) * t.A * t.A / K - Rational(3) * t.A * t.B;
    L.c2 = Rational(0);
    L.d1 = t.A * t.A * t.A / (Rational(2) * K) + Rational(5, 48) * K * K * t.B * t.B * t.B -
           Rational(3, 4) * t.A * t.A * t.B + Rational(11, 72) * K * t.B * t.B * t.A;
    L.d2 = t.C * t.C / Rational(4);
    SqrtClass s = sqrt_classify(Rational(1) + Rational(4) * K);
    if (s.kind == SqrtKind::RationalValue) L.n = (s.value - Rational(1)) / Rational(2);
    L.wp = weierstrass_series(L.g2, L.g3, 20);
    return L;
}

namespace detail {

// Frobenius solution in t of  xi'' = (12 p(t) + beta0) xi  at exponent lambda
inline LaurentSeries lame_solution(const LaurentSeries& wp, const Rational& beta0, long lambda,
                                   int order) {
    LaurentSeries s;
    s.expo = Rational(lambda);
    s.c.assign(static_cast<size_t>(order), QuadExt());
    s.c[0] = QuadExt(Rational(1));
    for (long m = 1; m < order; ++m) {
        Rational factor = Rational(lambda + m) * Rational(lambda + m - 1) - Rational(12);
        QuadExt rhs;
        if (m >= 2) rhs += QuadExt(beta0) * s.c[static_cast<size_t>(m - 2)];
        for (long k = 2; 2 * k <= m; ++k) {
            size_t off = 2 * static_cast<size_t>(k);  // wp coefficient of t^(2k-2)
            if (off < wp.c.size() && !wp.c[off].is_zero())
                rhs += Rational(12) * wp.c[off] * s.c[static_cast<size_t>(m - 2 * k)];
        }
        if (factor.is_zero()) {
            if (!rhs.is_zero()) throw ResonantCase(7);
            s.c[static_cast<size_t>(m)] = QuadExt();  // free coefficient, pinned to zero
        } else {
            s.c[static_cast<size_t>(m)] = rhs * QuadExt(Rational(1) / factor);
        }
    }
    return s;
}

}  // namespace detail

// Residue at t = 0 of D * xi11^(2) (xi12^(2))^2 for the n = 3 family, with
// xi11 solving xi'' = (12 p(t) + 2B - 2A) xi and xi12 solving xi'' = 12 p(t) xi
// (both t^-3 Frobenius branches, c0 = 1). The companion square product
// xi11^2 xi12 integrates to an exact derivative and carries no obstruction;
// this one vanishes identically on A = B, where the integrand degenerates to
// a multiple of (p')^3.
inline QuadExt lame_residue(const TrapParams& t) {
    if (!t.E.is_zero() || !t.F.is_zero()) throw BranchMismatch("lame_residue needs E = F = 0");
    if (t.C.is_zero() || t.D != Rational(3) * t.C) throw BranchMismatch("lame_residue needs D = 3C != 0");
    if (t.B.is_zero()) throw BranchMismatch("lame_residue needs B != 0");
    LameData L = lame_reduce(t, t.h);
    int order = 20;
    LaurentSeries wp = weierstrass_series(L.g2, L.g3, order + 4);
    Rational beta0 = Rational(2) * t.B - Rational(2) * t.A;  // 2BD/(3C) - 2A at D = 3C
    LaurentSeries x11 = detail::lame_solution(wp, beta0, -3, order);
    LaurentSeries x12 = detail::lame_solution(wp, Rational(0), -3, order);
    LaurentSeries prod = series_product(x11, series_product(x12, x12));
    return QuadExt(t.D) * series_residue(prod);
}

// --------------------------------------------------------------------------
// Confluent Heun (C^2 = 4BE) and Whittaker (C = E = 0) reductions.
// --------------------------------------------------------------------------

struct ConfluentHeunData {
    Rational alpha_sq;  // 36
    Rational eta;       // 1/2 - 2D/C
    Rational delta;     // 0
    Rational beta_sq;   // 1 + 4F/E
    Rational gamma_sq;  // 1 + 4A/B
};

inline ConfluentHeunData confluent_heun_reduce(const TrapParams& t) {
    if (t.C * t.C != Rational(4) * t.B * t.E || t.C.is_zero())
        throw BranchMismatch("confluent Heun reduction needs C^2 = 4BE, C != 0");
    ConfluentHeunData d;
    d.alpha_sq = Rational(36);
    d.eta = Rational(1, 2) - Rational(2) * t.D / t.C;
    d.delta = Rational(0);
    d.beta_sq = Rational(1) + Rational(4) * t.F / t.E;
    d.gamma_sq = Rational(1) + Rational(4) * t.A / t.B;
    return d;
}

struct WhittakerData {
    Rational kappa_prefactor;  // -D/(2B); kappa = prefactor * sqrt(B/F)
    SqrtClass kappa_root;      // sqrt(B/F)
    SqrtClass mu;              // sqrt(1/2 + A/B)

    bool kappa_is_rational() const {
        return kappa_prefactor.is_zero() || kappa_root.kind == SqrtKind::RationalValue;
    }
    // defined when kappa is rational
    Rational kappa_value() const {
        if (kappa_prefactor.is_zero()) return Rational(0);
        return kappa_prefactor * kappa_root.value;
    }
    bool kappa_is_real() const { return kappa_prefactor.is_zero() || kappa_root.kind != SqrtKind::Imaginary; }
};

inline WhittakerData whittaker_reduce(const TrapParams& t) {
    if (!t.C.is_zero() || !t.E.is_zero()) throw BranchMismatch("Whittaker reduction needs C = E = 0");
    if (t.B.is_zero() || t.F.is_zero()) throw BranchMismatch("Whittaker reduction needs B != 0, F != 0");
    WhittakerData d;
    d.kappa_prefactor = -t.D / (Rational(2) * t.B);
    d.kappa_root = sqrt_classify(t.B / t.F);
    d.mu = sqrt_classify(Rational(1, 2) + t.A / t.B);
    return d;
}

}  // namespace trapaudit
