// The decision tree: routes parameter sets through the separable/explicit
// gates, the Lame / Whittaker / confluent-Heun degenerate branches, the
// homogeneous-family screens, the branching test, the monodromy-trace
// denominator test, and the second-variation residue test. Produces a
// Verdict with a replayable Certificate.
#pragma once

#include <trapaudit/ve.hpp>

#include <map>
#include <string>

namespace trapaudit {

enum class Verdict {
    IntegrableSeparable,
    IntegrableExplicit,
    NoAnalyticIntegral,
    NonIntegrableMeromorphic,
    CandidateIntegrable,
    Undecided,
};

inline std::string verdict_str(Verdict v) {
    switch (v) {
        case Verdict::IntegrableSeparable: return "integrable_separable";
        case Verdict::IntegrableExplicit: return "integrable_explicit";
        case Verdict::NoAnalyticIntegral: return "no_analytic_integral";
        case Verdict::NonIntegrableMeromorphic: return "non_integrable_meromorphic";
        case Verdict::CandidateIntegrable: return "candidate_integrable";
        default: return "undecided";
    }
}

struct Finding {
    std::string rule;
    std::string cite;
    std::map<std::string, std::string> values;
    bool holds = false;
    // decision the tree takes when this finding is decisive (not serialized)
    std::optional<Verdict> decides;
};

struct Certificate {
    std::vector<Finding> findings;

    void add(std::string rule, std::string cite, std::map<std::string, std::string> values, bool holds,
             std::optional<Verdict> decides = std::nullopt) {
        findings.push_back({std::move(rule), std::move(cite), std::move(values), holds, decides});
    }

    // deterministic replay: the last decisive finding that holds fixes the verdict
    Verdict replay() const {
        Verdict v = Verdict::Undecided;
        for (const auto& f : findings)
            if (f.holds && f.decides) v = *f.decides;
        return v;
    }
};

struct Classification {
    Verdict verdict = Verdict::Undecided;
    std::string undecided_reason;
    std::vector<std::string> necessary_conditions;
    std::vector<std::string> warnings;
    Certificate certificate;
    // populated when the path computed them
    std::optional<DerivedQuantities> derived;
    std::optional<std::array<QuadExt, 4>> residues_z1, residues_z2;
    std::optional<Rational> lame_residue_value;  // rational in the Lame family
};

// true iff 2q +- p avoid the integers and the cosine-denominator rule holds
inline bool case_b_test(const Rational& q, const Rational& p) {
    Rational twoq = Rational(2) * q;
    if ((twoq + p).is_integer() || (twoq - p).is_integer()) return false;
    Int n1 = denominator_N(twoq), n2 = denominator_N(p);
    if (n1 < 4 || n2 < 4) return false;
    if (n1 == 5 && n2 == 5) return false;
    return true;
}

// complement of case_b_test on rational (q, p)
inline bool abelian_candidate(const Rational& q, const Rational& p) { return !case_b_test(q, p); }

namespace detail {

inline std::string scls(const SqrtClass& s) {
    switch (s.kind) {
        case SqrtKind::RationalValue: return s.value.str();
        case SqrtKind::IrrationalReal: return "sqrt(" + s.radicand.str() + ")";
        default: return "sqrt(" + s.radicand.str() + ") imaginary";
    }
}

// is v a nonzero even integer
inline bool nonzero_even_integer(const Rational& v) {
    return v.is_integer() && !v.is_zero() && v.num() % 2 == 0;
}

// is v a half-odd integer (element of Z + 1/2)
inline bool half_odd_integer(const Rational& v) { return v.den() == 2; }

}  // namespace detail

// Confluent-Heun branch (z1 = z2): meromorphically non-integrable unless some
// sign choice of +-beta +- gamma lands in the nonzero even integers.
inline Verdict confluent_heun_check(const ConfluentHeunData& d, Certificate* cert = nullptr) {
    SqrtClass beta = sqrt_classify(d.beta_sq);
    SqrtClass gamma = sqrt_classify(d.gamma_sq);
    bool escape = false;
    std::string witness;
    if (beta.kind == SqrtKind::RationalValue && gamma.kind == SqrtKind::RationalValue) {
        for (int sb : {1, -1})
            for (int sg : {1, -1}) {
                Rational v = Rational(sb) * beta.value + Rational(sg) * gamma.value;
                if (detail::nonzero_even_integer(v)) {
                    escape = true;
                    witness = v.str();
                }
            }
    }
    // irrational or imaginary values can never sum to a nonzero even integer:
    // equal radicands cancel to 0, anything else stays irrational
    if (cert)
        cert->add("heun.even_integer_escape", "confluent-Heun even-integer criterion",
                  {{"beta^2", d.beta_sq.str()},
                   {"gamma^2", d.gamma_sq.str()},
                   {"beta", detail::scls(beta)},
                   {"gamma", detail::scls(gamma)},
                   {"witness", escape ? witness : "none"}},
                  !escape, Verdict::NonIntegrableMeromorphic);
    return escape ? Verdict::CandidateIntegrable : Verdict::NonIntegrableMeromorphic;
}

// Whittaker branch (C = E = 0): non-integrable unless some +-kappa +- mu is a
// half-odd integer.
inline Verdict whittaker_check(const WhittakerData& d, Certificate* cert = nullptr) {
    bool escape = false;
    std::string witness;
    if (d.kappa_is_rational() && d.mu.kind == SqrtKind::RationalValue) {
        Rational k = d.kappa_value();
        for (int sk : {1, -1})
            for (int sm : {1, -1}) {
                Rational v = Rational(sk) * k + Rational(sm) * d.mu.value;
                if (detail::half_odd_integer(v)) {
                    escape = true;
                    witness = v.str();
                }
            }
    }
    if (cert)
        cert->add("whittaker.half_odd_escape", "Whittaker half-odd-integer criterion",
                  {{"kappa", d.kappa_is_rational() ? d.kappa_value().str()
                                                   : d.kappa_prefactor.str() + "*" + detail::scls(d.kappa_root)},
                   {"mu", detail::scls(d.mu)},
                   {"witness", escape ? witness : "none"}},
                  !escape, Verdict::NonIntegrableMeromorphic);
    return escape ? Verdict::CandidateIntegrable : Verdict::NonIntegrableMeromorphic;
}

// --------------------------------------------------------------------------
// Morales-Ruiz--Simo conditions for a Lame-type first variational equation.
// --------------------------------------------------------------------------

struct ThAResult {
    enum Kind { Condition1, Condition2, Condition3, None } kind = None;
    std::optional<Rational> n;  // condition 1 / 3
    std::optional<Int> m;       // condition 2
    std::string subcase;

    std::string str() const {
        switch (kind) {
            case Condition1: return "condition1(n=" + n->str() + ")";
            case Condition2: return "condition2(m=" + m->str() + (subcase.empty() ? "" : ", " + subcase) + ")";
            case Condition3: return "condition3(n=" + n->str() + ")";
            default: return "none";
        }
    }
};

inline ThAResult thA_check(const LameData& L) {
    ThAResult r;
    if (!L.a2.is_zero()) return r;
    Rational K = Rational(4) / L.a1;  // n(n+1)

    // condition 1: K = n(n+1) for natural n
    SqrtClass s1 = sqrt_classify(Rational(1) + Rational(4) * K);
    if (K.is_integer() && K > Rational(0) && s1.kind == SqrtKind::RationalValue && s1.value.is_integer()) {
        Rational n = (s1.value - Rational(1)) / Rational(2);
        if (n.is_integer() && n >= Rational(1)) {
            r.kind = ThAResult::Condition1;
            r.n = n;
            return r;
        }
    }
    // condition 2: a1 = 16/(4m^2-1) for natural m, with b2 = 0 and per-m side conditions
    Rational K2 = Rational(16) / L.a1;  // 4m^2 - 1
    if (L.b2.is_zero()) {
        Rational m2 = (K2 + Rational(1)) / Rational(4);
        SqrtClass sm = sqrt_classify(m2);
        if (sm.kind == SqrtKind::RationalValue && sm.value.is_integer() && sm.value >= Rational(1)) {
            Int m = sm.value.num();
            bool ok = false;
            std::string sub;
            if (m == 1) {
                ok = L.b1.is_zero();
                sub = "2.1";
            } else if (m == 2) {
                ok = L.c2.is_zero() && (Rational(16) * L.a1 * L.c1 + Rational(3) * L.b1 * L.b1).is_zero();
                sub = "2.2";
            } else if (m == 3) {
                ok = (Rational(16) * L.a1 * L.d2 + Rational(11) * L.b1 * L.c2).is_zero() &&
                     (Rational(1024) * L.a1 * L.a1 * L.d1 + Rational(704) * L.a1 * L.b1 * L.c1 +
                      Rational(45) * L.b1 * L.b1 * L.b1)
                         .is_zero();
                sub = "2.3";
            } else {
                long mm = m.convert_to<long>();
                bool c_route = (mm % 6 == 1 || mm % 6 == 2 || mm % 6 == 4 || mm % 6 == 5) &&
                               L.c1.is_zero() && L.c2.is_zero();
                bool d_route = (mm % 2 == 1) && L.d1.is_zero() && L.d2.is_zero();
                ok = L.b1.is_zero() && (c_route || d_route);
                sub = "2.m";
            }
            if (ok) {
                r.kind = ThAResult::Condition2;
                r.m = m;
                r.subcase = sub;
                return r;
            }
        }
    }
    // condition 3: n + 1/2 in (1/3)Z u (1/4)Z u (1/5)Z minus Z, with algebraic side conditions
    if (L.b2.is_zero() && s1.kind == SqrtKind::RationalValue) {
        Rational half = s1.value / Rational(2);  // n + 1/2
        bool member = !half.is_integer() &&
                      ((Rational(3) * half).is_integer() || (Rational(4) * half).is_integer() ||
                       (Rational(5) * half).is_integer());
        if (member) {
            bool first = L.c2.is_zero() && (L.b1 * L.b1 - Rational(3) * L.a1 * L.c1).is_zero();
            bool second = (L.c2 * L.b1 - Rational(3) * L.a1 * L.d2).is_zero() &&
                          (Rational(2) * L.b1 * L.b1 * L.b1 - Rational(9) * L.a1 * L.b1 * L.c1 +
                           Rational(27) * L.a1 * L.a1 * L.d1)
                              .is_zero();
            if (first || second) {
                r.kind = ThAResult::Condition3;
                r.n = (s1.value - Rational(1)) / Rational(2);
                return r;
            }
        }
    }
    return r;
}

// --------------------------------------------------------------------------
// Quartic-potential screen: which known-integrable V_max family the
// (E, F, G) triple matches, exactly or up to the E-normalized ratios.
// --------------------------------------------------------------------------

struct VmaxMatch {
    std::string family;      // e.g. "V3", "V5(a)"
    std::string convention;  // "exact" or "ratio"
    std::vector<std::string> conditions;
};

inline std::vector<VmaxMatch> vmax_screen(const TrapParams& t) {
    std::vector<VmaxMatch> out;
    auto qcls = sqrt_classify(t.B.is_zero() ? Rational(0) : t.A / t.B);
    std::string qcond = t.B.is_zero()
                            ? std::string("sqrt(A/B) undefined (B=0)")
                            : "sqrt(A/B) in Q: " + std::string(qcls.kind == SqrtKind::RationalValue ? "holds" : "fails");
    std::string ccond = "C=0: " + std::string(t.C.is_zero() ? "holds" : "fails");
    std::string dcond = "D=0: " + std::string(t.D.is_zero() ? "holds" : "fails");

    struct Pattern {
        const char* name;
        Rational E, F, G;
    };
    const Pattern exact_patterns[] = {
        {"V3", Rational(1, 4), Rational(1, 2), Rational(1, 4)},
        {"V5(a)", Rational(1, 4), Rational(3), Rational(4)},
        {"V5(b)", Rational(4), Rational(3), Rational(1, 4)},
        {"V6(a)", Rational(1, 4), Rational(3, 2), Rational(2)},
        {"V6(b)", Rational(2), Rational(3, 2), Rational(1, 4)},
    };
    for (const auto& p : exact_patterns) {
        bool exact = t.E == p.E && t.F == p.F && t.G == p.G;
        bool ratio = !exact && !t.E.is_zero() && !p.E.is_zero() && t.F / t.E == p.F / p.E &&
                     t.G / t.E == p.G / p.E;
        if (exact || ratio)
            out.push_back({p.name, exact ? "exact" : "ratio", {qcond, ccond, dcond}});
    }
    if (t.E.is_zero() && t.F.is_zero())
        out.push_back({"V1(a)", "exact", {"handled by the E=F=0 branch"}});
    if (t.F.is_zero() && t.G.is_zero() && !t.E.is_zero())
        out.push_back({"V1(b)", "exact", {qcond, dcond}});
    if (t.F.is_zero() && !t.E.is_zero() && !t.G.is_zero())
        out.push_back({"V4", t.E == Rational(1) ? "exact" : "ratio",
                       {qcond, dcond, "G unconstrained in this family (flagged)"}});
    return out;
}

// --------------------------------------------------------------------------
// Branch handlers.
// --------------------------------------------------------------------------

namespace detail {

inline void attach_vmax(const TrapParams& t, Classification& out) {
    for (const auto& m : vmax_screen(t)) {
        std::string line = m.family + " [" + m.convention + "]";
        for (const auto& c : m.conditions) line += "; " + c;
        out.necessary_conditions.push_back(line);
    }
}

inline Classification lame_branch(const TrapParams& t) {
    Classification out;
    if (t.C.is_zero()) {
        out.certificate.add("lame.form", "Lame reduction of the first variational equation",
                            {{"C", t.C.str()}}, false);
        out.certificate.add("verdict.undecided", "branch unresolved", {{"reason", "E=F=0, C=0"}}, true,
                            Verdict::Undecided);
        out.verdict = Verdict::Undecided;
        out.undecided_reason = "E=F=0 with C=0: no Lame reduction (no cubic term in the manifold flow)";
        return out;
    }
    if (t.B.is_zero()) {
        out.certificate.add("lame.elliptic", "elliptic modulus of the manifold solution",
                            {{"B", t.B.str()}}, false);
        out.certificate.add("verdict.undecided", "branch unresolved", {{"reason", "E=F=0, B=0"}}, true,
                            Verdict::Undecided);
        out.verdict = Verdict::Undecided;
        out.undecided_reason = "E=F=0 with B=0: degenerate elliptic data";
        return out;
    }
    Rational g2 = Rational(4) * t.B * t.B / Rational(9);
    Rational g3 = -(t.B * t.B * t.B) / Rational(18) - t.C * t.C * t.h / Rational(4);
    LameData L;
    try {
        L = lame_reduce(t, t.h);
    } catch (const EllipticDegenerate&) {
        out.verdict = Verdict::Undecided;
        out.undecided_reason = "elliptic discriminant vanishes at the given energy";
        out.certificate.add("lame.elliptic", "elliptic modulus of the manifold solution",
                            {{"g2", g2.str()}, {"g3", g3.str()}}, false);
        out.certificate.add("verdict.undecided", "branch unresolved",
                            {{"reason", "degenerate elliptic discriminant"}}, true, Verdict::Undecided);
        return out;
    }
    ThAResult th = thA_check(L);
    out.certificate.add("lame.thA", "Morales-Ruiz--Simo Lame integrability conditions",
                        {{"a1", L.a1.str()},
                         {"b1", L.b1.str()},
                         {"c1", L.c1.str()},
                         {"d1", L.d1.str()},
                         {"d2", L.d2.str()},
                         {"match", th.str()}},
                        th.kind != ThAResult::None, std::nullopt);
    if (th.kind == ThAResult::None) {
        out.certificate.add("lame.thA.exhausted", "Morales-Ruiz--Simo Lame integrability conditions",
                            {{"match", "none"}}, true, Verdict::NonIntegrableMeromorphic);
        out.verdict = Verdict::NonIntegrableMeromorphic;
        return out;
    }
    if (th.kind == ThAResult::Condition1 && *th.n == Rational(3)) {
        QuadExt res = lame_residue(t);
        out.lame_residue_value = res.rat();
        out.certificate.add("lame.ve2_residue", "n=3 second-variation residue at the elliptic pole",
                            {{"residue", res.str()}, {"A", t.A.str()}, {"B", t.B.str()}},
                            !res.is_zero(), Verdict::NonIntegrableMeromorphic);
        if (!res.is_zero()) {
            out.verdict = Verdict::NonIntegrableMeromorphic;
            return out;
        }
        out.verdict = Verdict::CandidateIntegrable;
        out.necessary_conditions.push_back("Lame n=3 with vanishing second-variation residue (A=B)");
        attach_vmax(t, out);
        out.certificate.add("verdict.candidate", "no exclusion applies; necessary conditions attached",
                            {{"conditions", std::to_string(out.necessary_conditions.size())}}, true,
                            Verdict::CandidateIntegrable);
        return out;
    }
    out.verdict = Verdict::CandidateIntegrable;
    out.necessary_conditions.push_back("Lame family passes " + th.str());
    attach_vmax(t, out);
    out.certificate.add("verdict.candidate", "no exclusion applies; necessary conditions attached",
                        {{"conditions", std::to_string(out.necessary_conditions.size())}}, true,
                        Verdict::CandidateIntegrable);
    return out;
}

inline Classification homogeneous_a0b0(const TrapParams& t) {
    // A = B = 0 with E != 0 (earlier gates removed E = 0)
    Classification out;
    if (t.C.is_zero()) {
        out.verdict = Verdict::Undecided;
        out.undecided_reason = "A=B=0 with C=0: the cubic-ratio datum P is undefined";
        out.certificate.add("a0b0.form", "homogeneous quadratic-free family", {{"C", "0"}}, false);
        out.certificate.add("verdict.undecided", "branch unresolved", {{"reason", "A=B=0, C=0"}}, true,
                            Verdict::Undecided);
        return out;
    }
    Rational P_sq = Rational(1) + Rational(4) * t.D / t.C;
    Rational p_sq = Rational(1) + Rational(4) * t.F / t.E;
    SqrtClass P = sqrt_classify(P_sq);
    SqrtClass p = sqrt_classify(p_sq);
    bool both_rational = P.kind == SqrtKind::RationalValue && p.kind == SqrtKind::RationalValue;
    out.certificate.add("a0b0.rationality", "branching exponents of the quadratic-free family",
                        {{"P^2", P_sq.str()}, {"p^2", p_sq.str()}, {"P", detail::scls(P)}, {"p", detail::scls(p)}},
                        !both_rational, Verdict::NonIntegrableMeromorphic);
    if (!both_rational) {
        out.verdict = Verdict::NonIntegrableMeromorphic;
        return out;
    }
    const Rational& Pv = P.value;
    const Rational& pv = p.value;
    bool sum_int = (Pv + pv).is_integer() || (Pv - pv).is_integer();
    Int NP = denominator_N(Pv), Np = denominator_N(pv);
    std::string sub;
    bool nonint = false;
    if (!sum_int) {
        sub = "b1";
        nonint = true;
    } else if (NP >= 4 && Np >= 4) {
        sub = NP == 5 && Np == 5 ? "b22" : "b21";
        nonint = true;
    } else if (NP <= 3 && Np <= 3 && !t.E.is_zero()) {
        Rational poly = Rational(3) * Pv * Pv * pv * pv - Pv * Pv * Pv * Pv - Rational(6) * pv * pv -
                        Pv * Pv + Rational(5);
        sub = "b3";
        nonint = !poly.is_zero();
        out.certificate.add("a0b0.b3_polynomial", "quartic obstruction polynomial in (P, p)",
                            {{"value", poly.str()}}, nonint, std::nullopt);
    }
    out.certificate.add("a0b0.subcase", "denominator classification of (P, p)",
                        {{"P", Pv.str()}, {"p", pv.str()}, {"N(P)", NP.str()}, {"N(p)", Np.str()},
                         {"subcase", sub.empty() ? "none" : sub}},
                        nonint, Verdict::NonIntegrableMeromorphic);
    if (nonint) {
        out.verdict = Verdict::NonIntegrableMeromorphic;
        return out;
    }
    out.verdict = Verdict::CandidateIntegrable;
    out.necessary_conditions.push_back("A=B=0 family matches no non-integrability sub-case (P=" + Pv.str() +
                                       ", p=" + pv.str() + ")");
    attach_vmax(t, out);
    out.certificate.add("verdict.candidate", "no exclusion applies; necessary conditions attached",
                        {{"conditions", std::to_string(out.necessary_conditions.size())}}, true,
                        Verdict::CandidateIntegrable);
    return out;
}

}  // namespace detail

inline Classification classify(const TrapParams& t) {
    Classification out;
    Certificate& cert = out.certificate;

    // gate 1: separated variables
    bool separable = t.F.is_zero() && t.D.is_zero();
    cert.add("gate.separable", "separated variables (no r-z coupling)",
             {{"F", t.F.str()}, {"D", t.D.str()}}, separable, Verdict::IntegrableSeparable);
    if (separable) {
        out.verdict = Verdict::IntegrableSeparable;
        return out;
    }

    // gate 2: explicitly solvable family
    bool expl = t.A.is_zero() && t.B.is_zero() && t.F.is_zero() && t.E.is_zero();
    cert.add("gate.explicit", "explicitly solvable family (A=B=E=F=0)",
             {{"A", t.A.str()}, {"B", t.B.str()}, {"E", t.E.str()}, {"F", t.F.str()}}, expl,
             Verdict::IntegrableExplicit);
    if (expl) {
        out.verdict = Verdict::IntegrableExplicit;
        return out;
    }

    // gate 3: Lame branch
    if (t.E.is_zero() && t.F.is_zero()) {
        cert.add("gate.lame", "quartic-free branch E=F=0", {{"E", "0"}, {"F", "0"}}, true);
        Classification sub = detail::lame_branch(t);
        for (auto& f : sub.certificate.findings) cert.findings.push_back(std::move(f));
        sub.certificate = std::move(cert);
        return sub;
    }

    // gates 4-5: E = 0, F != 0
    if (t.E.is_zero()) {
        if (t.C.is_zero()) {
            cert.add("gate.whittaker", "confluent branch C=E=0, F!=0", {{"C", "0"}, {"E", "0"}}, true);
            if (t.B.is_zero()) {
                out.verdict = Verdict::Undecided;
                out.undecided_reason = "C=E=B=0: Whittaker data undefined";
                cert.add("verdict.undecided", "branch unresolved", {{"reason", "C=E=B=0"}}, true,
                         Verdict::Undecided);
                return out;
            }
            WhittakerData wd = whittaker_reduce(t);
            out.verdict = whittaker_check(wd, &cert);
            if (out.verdict == Verdict::CandidateIntegrable) {
                out.necessary_conditions.push_back("some +-kappa +- mu is a half-odd integer");
                detail::attach_vmax(t, out);
                cert.add("verdict.candidate", "no exclusion applies; necessary conditions attached",
                         {{"conditions", std::to_string(out.necessary_conditions.size())}}, true,
                         Verdict::CandidateIntegrable);
            }
            return out;
        }
        // E = 0, F != 0, C != 0: the pair of linear conditions 2F = C, 16F = 3C
        bool d1 = t.C != Rational(2) * t.F;
        bool d2 = Rational(3) * t.C != Rational(16) * t.F;
        cert.add("gate.e0_linear", "linear exclusion for E=0, F!=0",
                 {{"2F-C", (Rational(2) * t.F - t.C).str()}, {"16F-3C", (Rational(16) * t.F - Rational(3) * t.C).str()}},
                 d1 || d2, Verdict::NonIntegrableMeromorphic);
        out.verdict = d1 || d2 ? Verdict::NonIntegrableMeromorphic : Verdict::CandidateIntegrable;
        if (out.verdict == Verdict::CandidateIntegrable)
            cert.add("verdict.candidate", "no exclusion applies; necessary conditions attached",
                     {{"conditions", "0"}}, true, Verdict::CandidateIntegrable);
        return out;
    }

    // gate 6: A = B = 0 (E != 0 from here on)
    if (t.A.is_zero() && t.B.is_zero()) {
        cert.add("gate.a0b0", "quadratic-free branch A=B=0", {{"A", "0"}, {"B", "0"}}, true);
        Classification sub = detail::homogeneous_a0b0(t);
        for (auto& f : sub.certificate.findings) cert.findings.push_back(std::move(f));
        sub.certificate = std::move(cert);
        return sub;
    }

    // unresolved: B = 0 with A != 0
    if (t.B.is_zero()) {
        cert.add("gate.b0", "B=0, A!=0", {{"A", t.A.str()}, {"B", "0"}}, true, Verdict::Undecided);
        out.verdict = Verdict::Undecided;
        out.undecided_reason = "B=0, A!=0 unresolved in source analysis";
        return out;
    }

    // gate 7: A = 0, B != 0 linear exclusion
    if (t.A.is_zero()) {
        Rational gap = Rational(2) * t.F * t.C - t.D * t.E;
        cert.add("gate.a0_linear", "linear exclusion for A=0, B!=0", {{"2FC-DE", gap.str()}},
                 !gap.is_zero(), Verdict::NonIntegrableMeromorphic);
        if (!gap.is_zero()) {
            out.verdict = Verdict::NonIntegrableMeromorphic;
            return out;
        }
    }

    // gate 8: coincident finite poles -> confluent Heun
    if ((t.C * t.C - Rational(4) * t.B * t.E).is_zero()) {
        cert.add("gate.heun", "coincident regular points z1=z2 (C^2=4BE)",
                 {{"C^2-4BE", (t.C * t.C - Rational(4) * t.B * t.E).str()}}, true);
        ConfluentHeunData hd = confluent_heun_reduce(t);
        out.verdict = confluent_heun_check(hd, &cert);
        if (out.verdict == Verdict::CandidateIntegrable) {
            out.necessary_conditions.push_back("some +-beta +- gamma is a nonzero even integer");
            detail::attach_vmax(t, out);
            cert.add("verdict.candidate", "no exclusion applies; necessary conditions attached",
                     {{"conditions", std::to_string(out.necessary_conditions.size())}}, true,
                     Verdict::CandidateIntegrable);
        }
        return out;
    }

    // gate 9: generic branch
    DerivedQuantities d = derive(t);
    out.derived = d;
    bool branching = d.q.kind != SqrtKind::RationalValue || d.p.kind != SqrtKind::RationalValue;
    cert.add("branching.exponents", "branching of local solutions (irrational exponent)",
             {{"q", detail::scls(d.q)}, {"p", detail::scls(d.p)}}, branching, Verdict::NoAnalyticIntegral);
    if (branching) {
        out.verdict = Verdict::NoAnalyticIntegral;
        return out;
    }

    const Rational& q = d.q.value;
    const Rational& p = d.p.value;
    bool caseb = case_b_test(q, p);
    cert.add("trace.denominators", "Baider-Churchill trace transcendence via the Berger denominator rule",
             {{"2q", (Rational(2) * q).str()},
              {"p", p.str()},
              {"N(2q)", denominator_N(Rational(2) * q).str()},
              {"N(p)", denominator_N(p).str()},
              {"reading", "conjunction: 2q+-p nonintegral AND N(2q)>=4, N(p)>=4, (N(2q),N(p))!=(5,5)"}},
             caseb, Verdict::NonIntegrableMeromorphic);
    if (caseb) {
        out.verdict = Verdict::NonIntegrableMeromorphic;
        return out;
    }
    cert.add("trace.abelian_candidate", "abelian first-variation monodromy region",
             {{"2q", (Rational(2) * q).str()}, {"p", p.str()}}, true);

    // case c: second-variation residues plus the parameter-scope test
    bool param_scope = !t.D.is_zero() && !t.C.is_zero() && !(d.p_squared - Rational(1)).is_zero();
    cert.add("ve2.parameter_scope", "second-variation conclusion scope (D!=0, C!=0, p^2!=1)",
             {{"D", t.D.str()}, {"C", t.C.str()}, {"p^2-1", (d.p_squared - Rational(1)).str()}},
             param_scope, std::nullopt);
    auto r1 = ve2_residues(t, 1);
    auto r2 = ve2_residues(t, 2);
    out.residues_z1 = r1;
    out.residues_z2 = r2;
    bool nonzero = false;
    for (const auto& x : r1) nonzero = nonzero || !x.is_zero();
    for (const auto& x : r2) nonzero = nonzero || !x.is_zero();
    if (nonzero != param_scope)
        out.warnings.push_back("second-variation residue and parameter-scope test disagree: residues " +
                               std::string(nonzero ? "nonzero" : "zero") + " outside the proposition scope");
    bool decided = nonzero && param_scope;
    cert.add("ve2.residue", "logarithmic obstruction in the second variation",
             {{"z1_principal", r1[2].str()}, {"z2_principal", r2[2].str()},
              {"nonzero", nonzero ? "true" : "false"}},
             decided, Verdict::NonIntegrableMeromorphic);
    if (decided) {
        out.verdict = Verdict::NonIntegrableMeromorphic;
        return out;
    }
    out.verdict = Verdict::CandidateIntegrable;
    out.necessary_conditions.push_back(nonzero
                                           ? "second-variation residue nonzero but outside the conclusion scope"
                                           : "second-variation residues vanish");
    detail::attach_vmax(t, out);
    cert.add("verdict.candidate", "no exclusion applies; necessary conditions attached",
             {{"conditions", std::to_string(out.necessary_conditions.size())}}, true,
             Verdict::CandidateIntegrable);
    return out;
}

}  // namespace trapaudit
