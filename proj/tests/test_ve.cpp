#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <trapaudit/ve.hpp>

#include "test_helpers.hpp"

using namespace trapaudit;
using trapaudit::testing::rand_abelian;
using trapaudit::testing::rand_generic;

namespace {

std::mt19937 rng(1905);

const TrapParams kFixture(Rational(1), Rational(2), Rational(3), Rational(1), Rational(1), Rational(2),
                          Rational(0));  // (B,C,E,D,F) = (2,3,1,1,2)

// exact evaluation of the nve coefficient functions vs the raw rational forms
void check_nve_matches_raw(const TrapParams& t) {
    FuchsODE ode = build_nve(t);
    DerivedQuantities d = derive(t);
    for (long long k : {2, 5, 7, -4, 9, 11, -8, 13}) {
        QuadExt z{Rational(k, 3)};
        if ((z - d.z1).is_zero() || (z - d.z2).is_zero() || z.is_zero()) continue;
        QuadExt denom = QuadExt(t.E) * z * z + QuadExt(t.C) * z + QuadExt(t.B);
        if (denom.is_zero()) continue;
        QuadExt a_raw = (QuadExt(Rational(4) * t.E) * z * z + QuadExt(Rational(3) * t.C) * z +
                         QuadExt(Rational(2) * t.B)) /
                        (QuadExt(Rational(2)) * z * denom);
        QuadExt b_raw = -(QuadExt(t.F) * z * z + QuadExt(t.D) * z + QuadExt(t.A)) / (z * z * denom);
        CHECK(ode.a.eval(z) == a_raw);
        CHECK(ode.b.eval(z) == b_raw);
    }
}

}  // namespace

TEST_CASE("derive") {
    TrapParams t(Rational(0), Rational(2), Rational(3), Rational(0), Rational(1), Rational(0), Rational(0));
    DerivedQuantities d = derive(t);
    CHECK(d.z1 == QuadExt(Rational(-1)));
    CHECK(d.z2 == QuadExt(Rational(-2)));

    TrapParams t2(Rational(4), Rational(1), Rational(1), Rational(0), Rational(1), Rational(0), Rational(0));
    DerivedQuantities d2 = derive(t2);
    CHECK(d2.q.kind == SqrtKind::RationalValue);
    CHECK(d2.q.value == Rational(2));
    CHECK(d2.p.value == Rational(1));  // F = 0

    CHECK_THROWS_AS(derive(TrapParams(Rational(1), Rational(0), Rational(1), Rational(1), Rational(1),
                                      Rational(1), Rational(0))),
                    DegenerateBranch);
    CHECK_THROWS_AS(derive(TrapParams(Rational(1), Rational(1), Rational(2), Rational(1), Rational(1),
                                      Rational(1), Rational(0))),
                    DegenerateBranch);  // C^2 = 4BE
}

TEST_CASE("build_nve partial fractions") {
    // residue structure of a(z): 1 at 0, 1/2 at z1 and z2
    TrapParams t = kFixture;
    FuchsODE ode = build_nve(t);
    DerivedQuantities d = derive(t);
    REQUIRE(ode.a.terms.size() == 3);
    CHECK(ode.a.terms[0].coeff == QuadExt(Rational(1)));
    CHECK(ode.a.terms[1].coeff == QuadExt(Rational(1, 2)));
    CHECK(ode.a.terms[2].coeff == QuadExt(Rational(1, 2)));

    // z^-2 coefficient of b is -q^2 = -1 for A = B = 1
    TrapParams t11(Rational(1), Rational(1), Rational(1), Rational(1), Rational(1), Rational(1), Rational(0));
    FuchsODE o11 = build_nve(t11);
    CHECK(o11.b.terms[0].coeff == QuadExt(Rational(-1)));

    // sum of simple-pole residues of b vanishes (regularity at infinity)
    QuadExt s = derive(t11).alpha + derive(t11).beta + derive(t11).gamma;
    CHECK(s.is_zero());

    // assembled partial fractions equal the raw rational functions
    check_nve_matches_raw(t11);
    check_nve_matches_raw(kFixture);
    for (int k = 0; k < 20; ++k) check_nve_matches_raw(rand_generic(rng));
    for (int k = 0; k < 10; ++k) check_nve_matches_raw(rand_abelian(rng));

    // tangent equation obeys the same identities
    for (int k = 0; k < 10; ++k) {
        TrapParams r = rand_generic(rng);
        FuchsODE tg = build_ve_tangent(r);
        DerivedQuantities dr = derive(r);
        for (long long n : {3, 5, -7}) {
            QuadExt z{Rational(n, 2)};
            if ((z - dr.z1).is_zero() || (z - dr.z2).is_zero() || z.is_zero()) continue;
            QuadExt denom = QuadExt(r.E) * z * z + QuadExt(r.C) * z + QuadExt(r.B);
            if (denom.is_zero()) continue;
            QuadExt b_raw = -(QuadExt(r.B) + QuadExt(Rational(3) * r.C) * z +
                              QuadExt(Rational(6) * r.E) * z * z) /
                            (z * z * denom);
            CHECK(tg.b.eval(z) == b_raw);
        }
    }
}

TEST_CASE("symbolic indicial identities on random parameters") {
    for (int k = 0; k < 50; ++k) {
        TrapParams t = rand_generic(rng);
        FuchsODE ode = build_nve(t);
        DerivedQuantities d = derive(t);
        IndicialData at0 = indicial_data(ode, SingPoint::at(QuadExt()));
        CHECK(at0.A0 == Rational(1));
        CHECK(at0.B0 == -d.q_squared);  // roots +-q
        // local data in the w = 1/z chart: A0 = 2 - a_inf = 0, B0 = b_inf
        IndicialData ati = indicial_data(ode, SingPoint::infinity());
        CHECK(ati.A0 == Rational(2) - d.a_inf);
        CHECK(ati.B0 == d.b_inf);  // roots (1 +- p)/2
        auto [rp, rm] = indicial_exponents(ode, SingPoint::infinity());
        CHECK(rp + rm == QuadExt(Rational(1)));
        CHECK(rp * rm == QuadExt(d.b_inf));
    }
}

TEST_CASE("ve2 sources") {
    Ve2Data v = ve2_sources(kFixture);
    CHECK(v.k2_1.num[0] == Rational(1));       // D
    CHECK(v.k2_1.num[1] == Rational(4));       // 2F
    CHECK(v.k2_1.den[2] == Rational(2));       // B
    CHECK(v.k2_1.den[3] == Rational(3));       // C
    CHECK(v.k2_1.den[4] == Rational(1));       // E
    CHECK(v.k2_2_second.num[0] == Rational(9));   // 3C
    CHECK(v.k2_2_second.num[1] == Rational(12));  // 12E

    // leading Laurent datum of the displayed kernel at z1:
    // ((p^2-1)/4 z1 + D/E)/(z1^2 (z1-z2)) with z1 = -1, z2 = -2 -> -1
    CHECK(v.kernel_lead_z1 == QuadExt(Rational(-1)));
    CHECK(v.kernel_lead_z2 == QuadExt(Rational(-3, 4)));

    // F = 0, D = 0: source vanishes identically
    TrapParams z(Rational(1), Rational(1), Rational(1), Rational(0), Rational(1), Rational(0), Rational(0));
    Ve2Data vz = ve2_sources(z);
    CHECK(vz.k2_1.num[0].is_zero());
    CHECK(vz.k2_1.num[1].is_zero());

    // numerator at z = 0 is D
    CHECK(ve2_sources(kFixture).k2_1.num[0] == kFixture.D);
}

TEST_CASE("ve2 residues: fixture and closed form") {
    // closed form
    CHECK(closed_form_residue(kFixture, 1) == QuadExt(Rational(-1)));
    CHECK(closed_form_residue(kFixture, 2) == QuadExt(Rational(-3, 4)));

    // series route reproduces the closed form at the principal component
    auto r1 = ve2_residues(kFixture, 1);
    auto r2 = ve2_residues(kFixture, 2);
    CHECK(r1[2] == QuadExt(Rational(-1)));
    CHECK(r2[2] == QuadExt(Rational(-3, 4)));
    CHECK(r1[0].is_zero());
    CHECK(r1[1].is_zero());
    CHECK(r1[3].is_zero());

    // equality holds on random abelian-candidate parameter sets
    for (int k = 0; k < 12; ++k) {
        TrapParams t = rand_abelian(rng);
        for (int i : {1, 2}) {
            auto r = ve2_residues(t, i);
            CHECK(r[2] == closed_form_residue(t, i));
            CHECK(r[0].is_zero());
            CHECK(r[1].is_zero());
            CHECK(r[3].is_zero());
        }
    }

    // derived-kernel variant for the same fixture: (2F z1 + D)/(E z1^2 (z1-z2))
    auto rd = ve2_residues(kFixture, 1, true);
    CHECK(rd[2] == QuadExt(Rational(-3)));

    // vanishing locus D = 0, C = 0, p^2 = 1 (F = 0)
    for (int k = 0; k < 10; ++k) {
        Rational B = testing::rand_nonzero(rng), E = testing::rand_nonzero(rng);
        TrapParams t(testing::rand_rational(rng), B, Rational(0), Rational(0), E, Rational(0),
                     testing::rand_rational(rng));
        if ((t.C * t.C - Rational(4) * t.B * t.E).is_zero()) continue;
        for (int i : {1, 2}) {
            auto r = ve2_residues(t, i);
            for (const auto& x : r) CHECK(x.is_zero());
            CHECK(closed_form_residue(t, i).is_zero());
        }
    }
}

TEST_CASE("wronskian normalization of the local pairs") {
    // zdot^2 * (scaled z-wronskian)^2 is a constant series = -2 E z_i^2 (z_i - z_j)
    for (int k = 0; k < 8; ++k) {
        TrapParams t = rand_generic(rng);
        DerivedQuantities d = derive(t);
        for (const FuchsODE& ode : {build_nve(t), build_ve_tangent(t)}) {
            SingPoint pt = SingPoint::at(d.z1);
            FrobeniusSeries f1 = frobenius_expand(ode, pt, Rational(1, 2), 10);
            FrobeniusSeries f2 = frobenius_expand(ode, pt, Rational(0), 10);
            // W = c1 c2 (u1' u2 - u1 u2') with c1 c2 = 2
            LaurentSeries W = series_sum(series_product(series_derivative(f1.series), f2.series),
                                         series_scale(series_product(f1.series, series_derivative(f2.series)),
                                                      QuadExt(Rational(-1))));
            W = series_scale(W, QuadExt(Rational(2)));
            CHECK(W.expo == Rational(-1, 2));
            CHECK(W.c[0] == QuadExt(Rational(1)));
            // zdot^2 = -2 z^2 (E z^2 + C z + B) expanded at z1
            LaurentSeries zd2;
            zd2.expo = Rational(0);
            zd2.c.resize(10);
            {
                // -2 (z1+u)^2 E (u + z1-z2) u: assemble the analytic cofactor then shift
                QuadExt delta = d.z1 - d.z2;
                std::vector<QuadExt> poly = {QuadExt(t.E) * d.z1 * d.z1 * delta,
                                             QuadExt(t.E) * (d.z1 * d.z1 + Rational(2) * d.z1 * delta),
                                             QuadExt(t.E) * (Rational(2) * d.z1 + delta), QuadExt(t.E)};
                for (size_t j = 0; j < poly.size(); ++j) zd2.c[j] = Rational(-2) * poly[j];
                zd2.expo = Rational(1);
            }
            LaurentSeries Wt2 = series_product(zd2, series_product(W, W));
            CHECK(Wt2.expo == Rational(0));
            CHECK(Wt2.c[0] == Rational(-2) * QuadExt(t.E) * d.z1 * d.z1 * (d.z1 - d.z2));
            for (size_t j = 1; j < Wt2.c.size(); ++j) CHECK(Wt2.c[j].is_zero());
        }
    }
}

TEST_CASE("weierstrass series") {
    LaurentSeries degenerate = weierstrass_series(Rational(0), Rational(0), 12);
    CHECK(degenerate.expo == Rational(-2));
    CHECK(degenerate.c[0] == QuadExt(Rational(1)));
    for (size_t j = 1; j < degenerate.c.size(); ++j) CHECK(degenerate.c[j].is_zero());

    Rational g2(7, 3), g3(-2, 5);
    LaurentSeries wp = weierstrass_series(g2, g3, 26);
    CHECK(wp.c[4] == QuadExt(g2 / Rational(20)));  // t^2 coefficient
    CHECK(wp.c[6] == QuadExt(g3 / Rational(28)));  // t^4 coefficient

    // defining identity (p')^2 - 4p^3 + g2 p + g3 = O(t^order)
    std::mt19937 local(99);
    for (int k = 0; k < 6; ++k) {
        Rational a = testing::rand_rational(local), b = testing::rand_rational(local);
        LaurentSeries p = weierstrass_series(a, b, 26);
        LaurentSeries dp = series_derivative(p);
        LaurentSeries lhs = series_product(dp, dp);
        LaurentSeries p3 = series_product(p, series_product(p, p));
        lhs = series_sum(lhs, series_scale(p3, QuadExt(Rational(-4))));
        lhs = series_sum(lhs, series_scale(p, QuadExt(a)));
        LaurentSeries cst;
        cst.expo = Rational(0);
        cst.c.assign(40, QuadExt());  // a constant is known to every order
        cst.c[0] = QuadExt(b);
        lhs = series_sum(lhs, cst);
        CHECK(lhs.size() >= 24);
        for (const auto& c : lhs.c) CHECK(c.is_zero());
    }
}

TEST_CASE("lame reduction") {
    // n = 3, A = 0, B = 1, C = 2 (D = 6): coefficient list
    TrapParams t(Rational(0), Rational(1), Rational(2), Rational(6), Rational(0), Rational(0), Rational(0));
    LameData L = lame_reduce(t, Rational(0));
    CHECK(L.a1 == Rational(1, 3));
    CHECK(L.b1 == Rational(-3));
    CHECK(L.c1 == Rational(11, 3));
    CHECK(L.d1 == Rational(15));
    CHECK(L.d2 == Rational(1));
    CHECK(L.a2.is_zero());
    CHECK(L.b2.is_zero());
    CHECK(L.c2.is_zero());
    REQUIRE(L.n.has_value());
    CHECK(*L.n == Rational(3));  // D = 3C: n in {3, -4}, nonnegative branch

    // g2 = 4, g3 = -3/2 for B = 3, h = 0
    TrapParams t2(Rational(1), Rational(3), Rational(1), Rational(3), Rational(0), Rational(0), Rational(0));
    LameData L2 = lame_reduce(t2, Rational(0));
    CHECK(L2.g2 == Rational(4));
    CHECK(L2.g3 == Rational(-3, 2));

    // elliptic discriminant: 13/2916 B^6 at h=0 vanishes only with B
    CHECK_THROWS_AS(lame_reduce(TrapParams(Rational(1), Rational(0), Rational(1), Rational(3), Rational(0),
                                           Rational(0), Rational(0)),
                                Rational(0)),
                    BranchMismatch);
    // h chosen to kill the discriminant: g2^3 = 27 g3^2
    // B = 3: g2 = 4, need g3^2 = 64/27 -> no rational h; use B such that it exists:
    // discriminant as a function of h is quadratic; pick C = 2, B = 3 and solve exactly
    // 64 - 27 ((-3/2) - h)^2 = 0 has no rational root, so probe the error path with g3 = +-8/sqrt(27)
    // (not rational): the EllipticDegenerate branch is exercised in the classifier tests instead.
}

TEST_CASE("lame residue") {
    // A = B makes the residue vanish identically
    std::mt19937 local(3);
    for (int k = 0; k < 10; ++k) {
        Rational B = testing::rand_nonzero(local);
        Rational C = testing::rand_nonzero(local);
        TrapParams t(B, B, C, Rational(3) * C, Rational(0), Rational(0), testing::rand_rational(local));
        CHECK(lame_residue(t).is_zero());
    }

    // A = 0, B = 1, D = 3 (C = 1): nonzero, frozen from a hand computation of
    // the recurrence through t^8 (sigma = 1/1080, residue = D * sigma)
    TrapParams t(Rational(0), Rational(1), Rational(1), Rational(3), Rational(0), Rational(0), Rational(0));
    QuadExt r = lame_residue(t);
    CHECK(r == QuadExt(Rational(1, 360)));

    // the transposed product xi11^2 xi12 is an exact derivative: residue-free
    {
        LameData L = lame_reduce(t, Rational(0));
        LaurentSeries wp = weierstrass_series(L.g2, L.g3, 24);
        LaurentSeries x11 = detail::lame_solution(wp, Rational(2), -3, 20);
        LaurentSeries x12 = detail::lame_solution(wp, Rational(0), -3, 20);
        CHECK(series_residue(series_product(x11, series_product(x11, x12))).is_zero());
    }

    // linear in D at fixed A, B and h = 0 (g3 loses its C-dependence)
    TrapParams t2 = t;
    t2.C = Rational(2);
    t2.D = Rational(6);
    CHECK(lame_residue(t2) == QuadExt(Rational(2)) * r);

    CHECK_THROWS_AS(lame_residue(TrapParams(Rational(1), Rational(1), Rational(1), Rational(1), Rational(0),
                                            Rational(0), Rational(0))),
                    BranchMismatch);  // D != 3C
}

TEST_CASE("confluent heun and whittaker data") {
    // (B,E,C) = (1,1,2), F = 2, A = 2 -> beta^2 = 9, gamma^2 = 9
    TrapParams t(Rational(2), Rational(1), Rational(2), Rational(1), Rational(1), Rational(2), Rational(0));
    ConfluentHeunData ch = confluent_heun_reduce(t);
    CHECK(ch.alpha_sq == Rational(36));
    CHECK(ch.beta_sq == Rational(9));
    CHECK(ch.gamma_sq == Rational(9));
    CHECK(ch.eta == Rational(1, 2) - Rational(1));
    CHECK(ch.delta.is_zero());
    CHECK_THROWS_AS(confluent_heun_reduce(kFixture), BranchMismatch);

    // kappa = 0 when D = 0; mu^2 = 1/2 + A/B
    TrapParams w(Rational(2), Rational(1), Rational(0), Rational(0), Rational(0), Rational(1), Rational(0));
    WhittakerData wd = whittaker_reduce(w);
    CHECK(wd.kappa_is_rational());
    CHECK(wd.kappa_value().is_zero());
    CHECK(wd.mu.radicand == Rational(5, 2));
    CHECK(wd.mu.kind == SqrtKind::IrrationalReal);
    CHECK_THROWS_AS(whittaker_reduce(kFixture), BranchMismatch);
}
