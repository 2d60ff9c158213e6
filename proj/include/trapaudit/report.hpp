// Audit report assembly and JSON serialization. Exact scalars serialize as
// canonical strings; keys come out sorted; no timestamps unless stamped.
#pragma once

#include <trapaudit/classifier.hpp>
#include <trapaudit/numerics.hpp>

#include <json.hpp>

#include <chrono>

namespace trapaudit {

inline const char* kVersion = "0.1.0";

struct AuditOptions {
    bool numeric_check = false;
    unsigned precision_bits = 64;
    bool stamp = false;
    std::uint64_t seed = 0;
};

namespace detail {

inline nlohmann::json params_json(const TrapParams& t) {
    return {{"A", t.A.str()}, {"B", t.B.str()}, {"C", t.C.str()}, {"D", t.D.str()},
            {"E", t.E.str()}, {"F", t.F.str()}, {"G", t.G.str()}, {"h", t.h.str()}};
}

inline nlohmann::json derived_json(const DerivedQuantities& d) {
    return {{"q", d.q.str()},
            {"p", d.p.str()},
            {"q_squared", d.q_squared.str()},
            {"p_squared", d.p_squared.str()},
            {"discriminant", d.disc.str()},
            {"z1", d.z1.str()},
            {"z2", d.z2.str()},
            {"alpha", d.alpha.str()},
            {"beta", d.beta.str()},
            {"gamma", d.gamma.str()},
            {"a0", d.a0.str()},
            {"b0", d.b0.str()},
            {"a_inf", d.a_inf.str()},
            {"b_inf", d.b_inf.str()}};
}

inline nlohmann::json rf_json(const RationalFunction& f) {
    nlohmann::json num = nlohmann::json::array(), den = nlohmann::json::array();
    for (const auto& c : f.num) num.push_back(c.str());
    for (const auto& c : f.den) den.push_back(c.str());
    return {{"num_coeffs", num}, {"den_coeffs", den}, {"text", f.str()}};
}

inline nlohmann::json residues_json(const std::array<QuadExt, 4>& r) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& x : r) a.push_back(x.str());
    return a;
}

// the displayed n = 3 residue quartic, for the mismatch log
inline Rational displayed_lame_quartic(const TrapParams& t) {
    const Rational &A = t.A, &B = t.B;
    Rational q = A * A * A * A / Rational(900) - Rational(8, 1125) * A * A * A * B +
                 Rational(97, 6750) * A * A * B * B - Rational(34, 3375) * A * B * B * B +
                 Rational(23, 13500) * B * B * B * B;
    return t.D * q;
}

}  // namespace detail

inline nlohmann::json audit_report(const TrapParams& t, const AuditOptions& opt = {}) {
    Classification c = classify(t);
    nlohmann::json j;
    j["version"] = kVersion;
    j["seed"] = opt.seed;
    j["params"] = detail::params_json(t);
    j["verdict"] = verdict_str(c.verdict);
    if (!c.undecided_reason.empty()) j["undecided_reason"] = c.undecided_reason;
    j["necessary_conditions"] = c.necessary_conditions;

    nlohmann::json findings = nlohmann::json::array();
    for (const auto& f : c.certificate.findings) {
        nlohmann::json vals;
        for (const auto& [k, v] : f.values) vals[k] = v;
        findings.push_back({{"rule", f.rule}, {"cite", f.cite}, {"values", vals}, {"holds", f.holds}});
    }
    j["findings"] = findings;

    std::vector<std::string> warnings = c.warnings;

    if (c.derived) {
        j["derived"] = detail::derived_json(*c.derived);
        warnings.push_back("the displayed 1/z datum of b(z) is alpha = D/B + AC/B^2; the exact residue "
                           "-D/B + AC/B^2 is used throughout");
    }

    if (c.residues_z1) {
        Ve2Data v = ve2_sources(t);
        nlohmann::json ve2;
        ve2["k2_1"] = detail::rf_json(v.k2_1);
        ve2["k2_2_first"] = detail::rf_json(v.k2_2_first);
        ve2["k2_2_second"] = detail::rf_json(v.k2_2_second);
        ve2["kernel_lead_z1"] = v.kernel_lead_z1.str();
        ve2["kernel_lead_z2"] = v.kernel_lead_z2.str();
        ve2["wronskian_constants"] = {v.wronskian_constants[0].str(), v.wronskian_constants[1].str(),
                                      v.wronskian_constants[2].str(), v.wronskian_constants[3].str()};
        ve2["product_structure"] = v.product_structure;
        ve2["residues_z1"] = detail::residues_json(*c.residues_z1);
        ve2["residues_z2"] = detail::residues_json(*c.residues_z2);
        ve2["closed_form_z1"] = closed_form_residue(t, 1).str();
        ve2["closed_form_z2"] = closed_form_residue(t, 2).str();
        ve2["residues_derived_kernel_z1"] = detail::residues_json(ve2_residues(t, 1, true));
        ve2["residues_derived_kernel_z2"] = detail::residues_json(ve2_residues(t, 2, true));
        warnings.push_back("second-variation residues follow the displayed kernel (F z + D); the direct "
                           "derivation gives (2F z + D); both sets are reported under ve2");
        if (opt.numeric_check) {
            ContourConfig cc;
            auto n1 = opt.precision_bits >= 64 ? contour_residue_impl<long double>(t, 1, 3, cc)
                                               : contour_residue_impl<double>(t, 1, 3, cc);
            auto n2 = opt.precision_bits >= 64 ? contour_residue_impl<long double>(t, 2, 3, cc)
                                               : contour_residue_impl<double>(t, 2, 3, cc);
            auto e1 = closed_form_residue(t, 1).to_complex();
            auto e2 = closed_form_residue(t, 2).to_complex();
            auto rel = [](std::complex<double> num, std::complex<long double> ex) {
                double m = std::max(1e-12, static_cast<double>(std::abs(ex)));
                return std::abs(num - std::complex<double>(static_cast<double>(ex.real()),
                                                           static_cast<double>(ex.imag()))) / m;
            };
            ve2["numeric_z1"] = {{"re", n1.real()}, {"im", n1.imag()}};
            ve2["numeric_z2"] = {{"re", n2.real()}, {"im", n2.imag()}};
            ve2["numeric_agree"] = rel(n1, e1) < 1e-8 && rel(n2, e2) < 1e-8;
        }
        j["ve2"] = ve2;
    }

    // degenerate-branch payloads
    if (t.E.is_zero() && t.F.is_zero() && !t.C.is_zero() && !t.B.is_zero() && !t.D.is_zero()) {
        try {
            LameData L = lame_reduce(t, t.h);
            nlohmann::json lame;
            lame["g2"] = L.g2.str();
            lame["g3"] = L.g3.str();
            if (L.n) {
                lame["n"] = L.n->str();
                lame["n_companion"] = (Rational(-1) - *L.n).str();  // same n(n+1)
            }
            lame["a1"] = L.a1.str();
            lame["a2"] = L.a2.str();
            lame["b1"] = L.b1.str();
            lame["b2"] = L.b2.str();
            lame["c1"] = L.c1.str();
            lame["c2"] = L.c2.str();
            lame["d1"] = L.d1.str();
            lame["d2"] = L.d2.str();
            if (c.lame_residue_value) {
                lame["residue"] = c.lame_residue_value->str();
                Rational displayed = detail::displayed_lame_quartic(t);
                lame["displayed_quartic"] = displayed.str();
                if (displayed != *c.lame_residue_value)
                    warnings.push_back("computed n=3 residue differs from the displayed quartic (computed " +
                                       c.lame_residue_value->str() + ", displayed " + displayed.str() +
                                       "); the computed value decides, the mismatch is logged only");
                warnings.push_back("xi11 constant term uses the direct derivation 2BD/(3C) - 2A; the "
                                   "displayed normal form BD/C - 2A differs");
                if (opt.numeric_check) {
                    auto ln = lame_contour_residue(t);
                    lame["numeric"] = {{"re", ln.real()}, {"im", ln.imag()}};
                    double m = std::max(1e-12, std::abs(c.lame_residue_value->to_double()));
                    lame["numeric_agree"] =
                        std::abs(ln - std::complex<double>(c.lame_residue_value->to_double(), 0)) / m < 1e-8;
                }
            }
            j["lame"] = lame;
        } catch (const TrapError&) {
            // degenerate elliptic data: the verdict path already recorded it
        }
    }
    if (t.C.is_zero() && t.E.is_zero() && !t.F.is_zero() && !t.B.is_zero()) {
        WhittakerData w = whittaker_reduce(t);
        j["whittaker"] = {{"kappa_prefactor", w.kappa_prefactor.str()},
                          {"kappa_root", w.kappa_root.str()},
                          {"kappa", w.kappa_is_rational() ? w.kappa_value().str() : "irrational"},
                          {"mu", w.mu.str()},
                          {"mu_squared", w.mu.radicand.str()}};
    }
    if (!t.B.is_zero() && !t.E.is_zero() && (t.C * t.C - Rational(4) * t.B * t.E).is_zero() &&
        !t.C.is_zero()) {
        ConfluentHeunData hd = confluent_heun_reduce(t);
        j["confluent_heun"] = {{"alpha_squared", hd.alpha_sq.str()},
                               {"eta", hd.eta.str()},
                               {"delta", hd.delta.str()},
                               {"beta_squared", hd.beta_sq.str()},
                               {"gamma_squared", hd.gamma_sq.str()}};
    }

    j["warnings"] = warnings;
    if (opt.stamp) {
        auto now = std::chrono::system_clock::now().time_since_epoch();
        j["timestamp_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
    }
    return j;
}

}  // namespace trapaudit
