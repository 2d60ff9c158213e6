#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <trapaudit/ve.hpp>

#include "test_helpers.hpp"

using namespace trapaudit;
using trapaudit::testing::rand_generic;

namespace {

std::mt19937 rng(411);

bool all_zero(const LaurentSeries& s) {
    for (const auto& c : s.c)
        if (!c.is_zero()) return false;
    return true;
}

}  // namespace

TEST_CASE("indicial exponents of the normal variational equation") {
    // lambda = +-sqrt(A/B) at z = 0
    TrapParams t(Rational(4), Rational(1), Rational(3), Rational(1), Rational(1), Rational(6), Rational(0));
    FuchsODE ode = build_nve(t);
    auto [lp, lm] = indicial_exponents(ode, SingPoint::at(QuadExt()));
    CHECK(lp == QuadExt(Rational(2)));
    CHECK(lm == QuadExt(Rational(-2)));

    // rho = (1 +- sqrt(1+4F/E))/2 at infinity: F=6, E=1 -> {3, -2}
    auto [rp, rm] = indicial_exponents(ode, SingPoint::infinity());
    CHECK(rp == QuadExt(Rational(3)));
    CHECK(rm == QuadExt(Rational(-2)));

    // {1/2, 0} at z1
    DerivedQuantities d = derive(t);
    auto [s1, s0] = indicial_exponents(ode, SingPoint::at(d.z1));
    CHECK(s1 == QuadExt(Rational(1, 2)));
    CHECK(s0 == QuadExt(Rational(0)));

    // Vieta: sum = 1 - A0, product = B0, on random parameter sets
    for (int k = 0; k < 30; ++k) {
        TrapParams r = rand_generic(rng);
        FuchsODE o = build_nve(r);
        for (const auto& pt : o.singular_points()) {
            IndicialData id = indicial_data(o, pt);
            auto [a, b] = indicial_exponents(o, pt);
            CHECK(a + b == QuadExt(Rational(1) - id.A0));
            CHECK(a * b == QuadExt(id.B0));
        }
    }
}

TEST_CASE("irregular singular points are rejected") {
    FuchsODE ode;
    ode.a.terms = {{QuadExt(), 2, QuadExt(Rational(1))}};  // double pole in a
    CHECK_THROWS_AS(indicial_exponents(ode, SingPoint::at(QuadExt())), IrregularSingularPoint);

    FuchsODE ode2;  // polynomial part makes infinity irregular
    ode2.a.terms = {{QuadExt(), 1, QuadExt(Rational(1))}};
    ode2.b.poly = {{1, QuadExt(Rational(1))}};
    CHECK_THROWS_AS(indicial_exponents(ode2, SingPoint::infinity()), IrregularSingularPoint);

    FuchsODE ode3;  // lone simple pole in b: z^2 b ~ z at infinity
    ode3.b.terms = {{QuadExt(), 1, QuadExt(Rational(1))}};
    CHECK_THROWS_AS(indicial_exponents(ode3, SingPoint::infinity()), IrregularSingularPoint);
}

TEST_CASE("frobenius expansion") {
    // xi'' + (1/z) xi' = 0 at 0, exponent 0: the constant solution
    FuchsODE ode;
    ode.a.terms = {{QuadExt(), 1, QuadExt(Rational(1))}};
    FrobeniusSeries s = frobenius_expand(ode, SingPoint::at(QuadExt()), Rational(0), 10);
    CHECK(s.series.c[0] == QuadExt(Rational(1)));
    for (int k = 1; k < 10; ++k) CHECK(s.series.c[static_cast<size_t>(k)].is_zero());

    // first-order coefficient (3 z1 - 2 z2)/(2 z1 (z1 - z2)) at z1, exponent 1/2,
    // for (B,C,E) = (2,3,1): z1 = -1, z2 = -2 -> -1/2
    TrapParams t(Rational(0), Rational(2), Rational(3), Rational(0), Rational(1), Rational(0), Rational(0));
    FuchsODE tangent = build_ve_tangent(t);
    DerivedQuantities d = derive(t);
    CHECK(d.z1 == QuadExt(Rational(-1)));
    CHECK(d.z2 == QuadExt(Rational(-2)));
    FrobeniusSeries f = frobenius_expand(tangent, SingPoint::at(d.z1), Rational(1, 2), 8);
    QuadExt expected = (Rational(3) * d.z1 - Rational(2) * d.z2) /
                       (Rational(2) * d.z1 * (d.z1 - d.z2));
    CHECK(expected == QuadExt(Rational(-1, 2)));
    CHECK(f.series.c[1] == expected);

    // resonant pair is refused
    TrapParams tr(Rational(1), Rational(1), Rational(3), Rational(1), Rational(1), Rational(0), Rational(0));
    FuchsODE nve = build_nve(tr);  // exponents +-1 at 0, gap 2
    CHECK_THROWS_AS(frobenius_expand(nve, SingPoint::at(QuadExt()), Rational(-1), 8), ResonantCase);

    // wrong exponent is refused
    CHECK_THROWS_AS(frobenius_expand(nve, SingPoint::at(QuadExt()), Rational(1, 3), 8),
                    PreconditionViolation);
}

TEST_CASE("frobenius defect vanishes to the verified window") {
    for (int k = 0; k < 20; ++k) {
        TrapParams t = rand_generic(rng);
        FuchsODE ode = build_nve(t);
        DerivedQuantities d = derive(t);
        for (const QuadExt& z : {d.z1, d.z2})
            for (const Rational& e : {Rational(0), Rational(1, 2)}) {
                FrobeniusSeries s = frobenius_expand(ode, SingPoint::at(z), e, 9);
                CHECK(all_zero(frobenius_defect(ode, s)));
            }
    }
    // also at 0 and infinity when nonresonant
    TrapParams t(Rational(9, 4), Rational(1), Rational(3), Rational(1), Rational(1), Rational(2), Rational(0));
    FuchsODE ode = build_nve(t);  // q = 3/2: exponents +-3/2 at 0, gap 3... resonant; use +3/2
    FrobeniusSeries s0 = frobenius_expand(ode, SingPoint::at(QuadExt()), Rational(3, 2), 9);
    CHECK(all_zero(frobenius_defect(ode, s0)));
    FrobeniusSeries si = frobenius_expand(ode, SingPoint::infinity(), Rational(2), 9);
    CHECK(all_zero(frobenius_defect(ode, si)));
}

TEST_CASE("series product, sum, residue") {
    SingPoint p0 = SingPoint::at(QuadExt());
    FrobeniusSeries a{p0, {Rational(1, 2), {QuadExt(Rational(1)), QuadExt(Rational(1))}}};
    FrobeniusSeries b{p0, {Rational(-1, 2), {QuadExt(Rational(1)), QuadExt(Rational(-1))}}};
    FrobeniusSeries ab = series_mul(a, b);  // z^(1/2)(1+z) * z^(-1/2)(1-z) = 1 - z^2 truncated
    CHECK(ab.series.expo == Rational(0));
    CHECK(ab.series.c[0] == QuadExt(Rational(1)));
    CHECK(ab.series.c[1].is_zero());

    FrobeniusSeries one{p0, {Rational(0), {QuadExt(Rational(1)), QuadExt(), QuadExt()}}};
    FrobeniusSeries s_one = series_mul(a, one);
    CHECK(s_one.series.expo == a.series.expo);
    CHECK(s_one.series.c[0] == a.series.c[0]);
    CHECK(s_one.series.c[1] == a.series.c[1]);

    SingPoint p1 = SingPoint::at(QuadExt(Rational(1)));
    CHECK_THROWS_AS(series_mul(a, FrobeniusSeries{p1, a.series}), ExpansionPointMismatch);

    // residues
    FrobeniusSeries simple{p0, {Rational(-1), {QuadExt(Rational(2)), QuadExt(Rational(7))}}};
    CHECK(residue_at(simple, p0) == QuadExt(Rational(2)));
    FrobeniusSeries regular{p0, {Rational(0), {QuadExt(Rational(5)), QuadExt(Rational(1))}}};
    CHECK(residue_at(regular, p0).is_zero());
    FrobeniusSeries half{p0, {Rational(-3, 2), {QuadExt(Rational(5))}}};
    CHECK(residue_at(half, p0).is_zero());
    FrobeniusSeries deep{p0, {Rational(-4), {QuadExt(Rational(5)), QuadExt(Rational(1))}}};
    CHECK_THROWS_AS(residue_at(deep, p0), InsufficientTruncation);

    // bilinearity of residue over products
    std::mt19937 local(7);
    for (int k = 0; k < 40; ++k) {
        auto rnd = [&] {
            LaurentSeries s;
            s.expo = Rational(std::uniform_int_distribution<int>(-2, 0)(local));
            s.c.resize(5);
            for (auto& c : s.c) c = QuadExt(testing::rand_rational(local));
            return s;
        };
        LaurentSeries f = rnd(), g = rnd(), h = rnd();
        QuadExt lhs = series_residue(series_product(series_sum(f, g), h));
        QuadExt rhs = series_residue(series_product(f, h)) + series_residue(series_product(g, h));
        CHECK(lhs == rhs);
    }
}

TEST_CASE("trace data") {
    // q = 1, p = 5: t0 = -2cos(2 pi) = -2, t_inf = 2cos(5 pi) = -2
    TrapParams t(Rational(1), Rational(1), Rational(1), Rational(3), Rational(1), Rational(6), Rational(0));
    FuchsODE ode = build_nve(t);
    TraceData tr = trace_data(ode);
    const TracePoint& t0 = tr.at(SingPoint::at(QuadExt()));
    CHECK(t0.delta.kind == SqrtKind::RationalValue);
    CHECK(t0.delta.value == Rational(2));
    CHECK(t0.exactness == CosExactness::RationalValue);
    CHECK(*t0.value == Rational(-2));
    const TracePoint& ti = tr.at(SingPoint::infinity());
    CHECK(ti.delta.value == Rational(5));
    CHECK(*ti.value == Rational(-2));

    // generic z1 != z2: t1 = t2 = -2cos(pi/2) = 0
    for (int k = 0; k < 15; ++k) {
        TrapParams r = rand_generic(rng);
        FuchsODE o = build_nve(r);
        DerivedQuantities d = derive(r);
        TraceData td = trace_data(o);
        for (const QuadExt& z : {d.z1, d.z2}) {
            const TracePoint& tp = td.at(SingPoint::at(z));
            CHECK(tp.delta.value == Rational(1, 2));
            CHECK(tp.exactness == CosExactness::RationalValue);
            CHECK(tp.value->is_zero());
        }
    }

    // irrational branch exponent: exactness class beyond the rational table
    TrapParams ti2(Rational(2), Rational(1), Rational(1), Rational(1), Rational(1), Rational(1), Rational(0));
    TraceData td = trace_data(build_nve(ti2));
    CHECK(td.at(SingPoint::at(QuadExt())).exactness == CosExactness::IrrationalAngle);
}
