// Floating-point corroboration layer: Hamiltonian flow integration
// (adaptive Dormand-Prince and a 4th-order symplectic composition),
// complex-plane continuation of the variational equations, contour-integral
// residues with monodromy-separated local branches, and Poincare sections.
#pragma once

#include <trapaudit/ve.hpp>

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

namespace trapaudit {

struct StepFailure : TrapError {
    double last_time;
    explicit StepFailure(double t)
        : TrapError("StepFailure", "integration step failure at t = " + std::to_string(t)), last_time(t) {}
};
struct PathThroughSingularity : TrapError {
    PathThroughSingularity() : TrapError("PathThroughSingularity", "contour passes too close to a singular point") {}
};
struct WronskianDegenerate : TrapError {
    WronskianDegenerate() : TrapError("WronskianDegenerate", "fundamental pair degenerated along the path") {}
};
struct NoCrossingFound : TrapError {
    NoCrossingFound() : TrapError("NoCrossingFound", "no section crossing within the time budget") {}
};

// --------------------------------------------------------------------------
// Hamiltonian flow.
// --------------------------------------------------------------------------

enum class FlowMethod { AdaptiveRK, Symplectic };

struct IntegratorConfig {
    FlowMethod method = FlowMethod::Symplectic;
    double abs_tol = 1e-12;
    double rel_tol = 1e-12;
    double max_step = 0.1;
    double fixed_step = 1e-3;  // symplectic step
    double sample_dt = 0.01;   // trajectory output spacing
};

struct FlowState {
    double r, p_r, z, p_z;
};

struct Trajectory {
    std::vector<double> t;
    std::vector<FlowState> samples;
    double energy_drift = 0.0;
};

struct FlowSystem {
    double A, B, C, D, E, F, G;

    static FlowSystem from(const TrapParams& p) {
        return {p.A.to_double(), p.B.to_double(), p.C.to_double(), p.D.to_double(),
                p.E.to_double(), p.F.to_double(), p.G.to_double()};
    }

    double potential(double r, double z) const {
        return A * r * r + B * z * z + C * z * z * z + D * r * r * z + E * z * z * z * z +
               F * r * r * z * z + G * r * r * r * r;
    }
    double hamiltonian(const FlowState& s) const {
        return 0.5 * (s.p_r * s.p_r + s.p_z * s.p_z) + potential(s.r, s.z);
    }
    // (force_r, force_z) = -grad V
    std::array<double, 2> force(double r, double z) const {
        double fr = -(2 * A * r + 2 * D * r * z + 2 * F * r * z * z + 4 * G * r * r * r);
        double fz = -(2 * B * z + 3 * C * z * z + D * r * r + 4 * E * z * z * z + 2 * F * r * r * z);
        return {fr, fz};
    }
    std::array<double, 4> rhs(const FlowState& s) const {
        auto f = force(s.r, s.z);
        return {s.p_r, f[0], s.p_z, f[1]};
    }
};

namespace detail {

inline FlowState verlet_step(const FlowSystem& sys, FlowState s, double h) {
    auto f0 = sys.force(s.r, s.z);
    s.p_r += 0.5 * h * f0[0];
    s.p_z += 0.5 * h * f0[1];
    s.r += h * s.p_r;
    s.z += h * s.p_z;
    auto f1 = sys.force(s.r, s.z);
    s.p_r += 0.5 * h * f1[0];
    s.p_z += 0.5 * h * f1[1];
    return s;
}

// 4th-order Yoshida composition of velocity-Verlet
inline FlowState yoshida4_step(const FlowSystem& sys, FlowState s, double h) {
    static const double cbrt2 = std::cbrt(2.0);
    static const double w1 = 1.0 / (2.0 - cbrt2);
    static const double w0 = -cbrt2 / (2.0 - cbrt2);
    s = verlet_step(sys, s, w1 * h);
    s = verlet_step(sys, s, w0 * h);
    s = verlet_step(sys, s, w1 * h);
    return s;
}

// one Dormand-Prince 5(4) step; returns (state5, error_estimate)
inline std::pair<FlowState, double> dp45_step(const FlowSystem& sys, const FlowState& s, double h) {
    using V = std::array<double, 4>;
    auto add = [](const FlowState& a, const V& k, double c) {
        return FlowState{a.r + c * k[0], a.p_r + c * k[1], a.z + c * k[2], a.p_z + c * k[3]};
    };
    static const double a21 = 1.0 / 5;
    static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
    static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
    static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                        b6 = 11.0 / 84;
    static const double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
                        e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;
    V k1 = sys.rhs(s);
    V k2 = sys.rhs(add(s, k1, h * a21));
    FlowState s3{s.r + h * (a31 * k1[0] + a32 * k2[0]), s.p_r + h * (a31 * k1[1] + a32 * k2[1]),
                 s.z + h * (a31 * k1[2] + a32 * k2[2]), s.p_z + h * (a31 * k1[3] + a32 * k2[3])};
    V k3 = sys.rhs(s3);
    FlowState s4{s.r + h * (a41 * k1[0] + a42 * k2[0] + a43 * k3[0]),
                 s.p_r + h * (a41 * k1[1] + a42 * k2[1] + a43 * k3[1]),
                 s.z + h * (a41 * k1[2] + a42 * k2[2] + a43 * k3[2]),
                 s.p_z + h * (a41 * k1[3] + a42 * k2[3] + a43 * k3[3])};
    V k4 = sys.rhs(s4);
    FlowState s5{s.r + h * (a51 * k1[0] + a52 * k2[0] + a53 * k3[0] + a54 * k4[0]),
                 s.p_r + h * (a51 * k1[1] + a52 * k2[1] + a53 * k3[1] + a54 * k4[1]),
                 s.z + h * (a51 * k1[2] + a52 * k2[2] + a53 * k3[2] + a54 * k4[2]),
                 s.p_z + h * (a51 * k1[3] + a52 * k2[3] + a53 * k3[3] + a54 * k4[3])};
    V k5 = sys.rhs(s5);
    FlowState s6{s.r + h * (a61 * k1[0] + a62 * k2[0] + a63 * k3[0] + a64 * k4[0] + a65 * k5[0]),
                 s.p_r + h * (a61 * k1[1] + a62 * k2[1] + a63 * k3[1] + a64 * k4[1] + a65 * k5[1]),
                 s.z + h * (a61 * k1[2] + a62 * k2[2] + a63 * k3[2] + a64 * k4[2] + a65 * k5[2]),
                 s.p_z + h * (a61 * k1[3] + a62 * k2[3] + a63 * k3[3] + a64 * k4[3] + a65 * k5[3])};
    V k6 = sys.rhs(s6);
    FlowState out{s.r + h * (b1 * k1[0] + b3 * k3[0] + b4 * k4[0] + b5 * k5[0] + b6 * k6[0]),
                  s.p_r + h * (b1 * k1[1] + b3 * k3[1] + b4 * k4[1] + b5 * k5[1] + b6 * k6[1]),
                  s.z + h * (b1 * k1[2] + b3 * k3[2] + b4 * k4[2] + b5 * k5[2] + b6 * k6[2]),
                  s.p_z + h * (b1 * k1[3] + b3 * k3[3] + b4 * k4[3] + b5 * k5[3] + b6 * k6[3])};
    V k7 = sys.rhs(out);
    double err = 0;
    V e4th;
    e4th[0] = s.r + h * (e1 * k1[0] + e3 * k3[0] + e4 * k4[0] + e5 * k5[0] + e6 * k6[0] + e7 * k7[0]);
    e4th[1] = s.p_r + h * (e1 * k1[1] + e3 * k3[1] + e4 * k4[1] + e5 * k5[1] + e6 * k6[1] + e7 * k7[1]);
    e4th[2] = s.z + h * (e1 * k1[2] + e3 * k3[2] + e4 * k4[2] + e5 * k5[2] + e6 * k6[2] + e7 * k7[2]);
    e4th[3] = s.p_z + h * (e1 * k1[3] + e3 * k3[3] + e4 * k4[3] + e5 * k5[3] + e6 * k6[3] + e7 * k7[3]);
    err = std::max({std::abs(out.r - e4th[0]), std::abs(out.p_r - e4th[1]), std::abs(out.z - e4th[2]),
                    std::abs(out.p_z - e4th[3])});
    return {out, err};
}

}  // namespace detail

inline Trajectory integrate_flow(const TrapParams& p, FlowState s0, double t_max,
                                 const IntegratorConfig& cfg = {}) {
    FlowSystem sys = FlowSystem::from(p);
    Trajectory tr;
    double H0 = sys.hamiltonian(s0);
    double t = 0.0, next_sample = 0.0;
    FlowState s = s0;
    auto record = [&](double tt, const FlowState& ss) {
        tr.t.push_back(tt);
        tr.samples.push_back(ss);
        tr.energy_drift = std::max(tr.energy_drift, std::abs(sys.hamiltonian(ss) - H0));
    };
    if (cfg.method == FlowMethod::Symplectic) {
        double h = cfg.fixed_step;
        long n = static_cast<long>(std::ceil(t_max / h));
        record(0.0, s);
        for (long i = 1; i <= n; ++i) {
            s = detail::yoshida4_step(sys, s, h);
            t = static_cast<double>(i) * h;
            if (!std::isfinite(s.r) || !std::isfinite(s.z)) throw StepFailure(t);
            if (t + 1e-15 >= next_sample + cfg.sample_dt || i == n) {
                record(t, s);
                next_sample = t;
            }
        }
        return tr;
    }
    double h = std::min(cfg.max_step, 1e-3);
    record(0.0, s);
    while (t < t_max) {
        h = std::min(h, t_max - t);
        auto [s_new, err] = detail::dp45_step(sys, s, h);
        double scale = cfg.abs_tol + cfg.rel_tol * std::max({std::abs(s.r), std::abs(s.z),
                                                             std::abs(s.p_r), std::abs(s.p_z), 1.0});
        if (err <= scale) {
            t += h;
            s = s_new;
            if (!std::isfinite(s.r) || !std::isfinite(s.z)) throw StepFailure(t);
            if (t >= next_sample + cfg.sample_dt - 1e-15 || t >= t_max) {
                record(t, s);
                next_sample = t;
            }
        }
        double factor = err > 0 ? 0.9 * std::pow(scale / err, 0.2) : 5.0;
        h *= std::clamp(factor, 0.2, 5.0);
        h = std::min(h, cfg.max_step);
        if (h < 1e-14) throw StepFailure(t);
    }
    return tr;
}

// --------------------------------------------------------------------------
// Complex continuation of a second-order ODE  xi'' + a(z) xi' + b(z) xi = 0.
// --------------------------------------------------------------------------

template <typename Real>
struct ComplexODE {
    using C = std::complex<Real>;
    std::function<C(C)> a, b;

    // advance (xi, xi') along the straight segment z0 -> z1 with n RK4 steps
    std::array<C, 2> continue_segment(std::array<C, 2> y, C z0, C z1, int n) const {
        C dz = (z1 - z0) / Real(n);
        auto rhs = [&](C z, const std::array<C, 2>& v) {
            return std::array<C, 2>{v[1] * dz, (-a(z) * v[1] - b(z) * v[0]) * dz};
        };
        for (int i = 0; i < n; ++i) {
            C z = z0 + dz * Real(i);
            auto k1 = rhs(z, y);
            auto k2 = rhs(z + dz * Real(0.5), {y[0] + k1[0] * Real(0.5), y[1] + k1[1] * Real(0.5)});
            auto k3 = rhs(z + dz * Real(0.5), {y[0] + k2[0] * Real(0.5), y[1] + k2[1] * Real(0.5)});
            auto k4 = rhs(z + dz, {y[0] + k3[0], y[1] + k3[1]});
            y[0] += (k1[0] + Real(2) * k2[0] + Real(2) * k3[0] + k4[0]) / Real(6);
            y[1] += (k1[1] + Real(2) * k2[1] + Real(2) * k3[1] + k4[1]) / Real(6);
        }
        return y;
    }
};

template <typename Real>
ComplexODE<Real> embed_ode(const FuchsODE& ode) {
    using C = std::complex<Real>;
    struct Term {
        C pole;
        int order;
        C coeff;
    };
    auto conv = [](const QuadExt& q) {
        auto z = q.to_complex();
        return C(static_cast<Real>(z.real()), static_cast<Real>(z.imag()));
    };
    auto build = [&](const PartialFraction& pf) {
        std::vector<Term> terms;
        for (const auto& t : pf.terms) terms.push_back({conv(t.pole), t.order, conv(t.coeff)});
        std::vector<std::pair<int, C>> poly;
        for (const auto& [m, c] : pf.poly) poly.push_back({m, conv(c)});
        return [terms, poly](C z) {
            C v{};
            for (const auto& t : terms) {
                C d = z - t.pole;
                C p = d;
                for (int i = 1; i < t.order; ++i) p *= d;
                v += t.coeff / p;
            }
            for (const auto& [m, c] : poly) {
                C p{Real(1), Real(0)};
                for (int i = 0; i < m; ++i) p *= z;
                v += c * p;
            }
            return v;
        };
    };
    ComplexODE<Real> out;
    out.a = build(ode.a);
    out.b = build(ode.b);
    return out;
}

// node values of a fundamental pair around a circle traversed `loops` times
template <typename Real>
struct CirclePair {
    using C = std::complex<Real>;
    C center;
    Real radius;
    int nodes;  // per loop
    int loops;
    std::vector<std::array<C, 2>> fa, fb;  // (value, derivative) at each node

    C node_z(int k) const {
        Real th = Real(2) * std::numbers::pi_v<Real> * Real(k) / Real(nodes);
        return center + radius * C(std::cos(th), std::sin(th));
    }
};

template <typename Real>
CirclePair<Real> continue_pair_on_circle(const ComplexODE<Real>& ode, std::complex<Real> center,
                                         Real radius, int nodes, int loops, int total_steps_per_loop) {
    CirclePair<Real> cp;
    cp.center = center;
    cp.radius = radius;
    cp.nodes = nodes;
    cp.loops = loops;
    int substeps = std::max(4, total_steps_per_loop / nodes);
    std::array<std::complex<Real>, 2> ya{std::complex<Real>(1), std::complex<Real>(0)};
    std::array<std::complex<Real>, 2> yb{std::complex<Real>(0), std::complex<Real>(1)};
    int total = nodes * loops;
    cp.fa.reserve(static_cast<size_t>(total) + 1);
    cp.fb.reserve(static_cast<size_t>(total) + 1);
    cp.fa.push_back(ya);
    cp.fb.push_back(yb);
    for (int k = 0; k < total; ++k) {
        auto z0 = cp.node_z(k), z1 = cp.node_z(k + 1);
        // short chords: curvature handled by substeps
        ya = ode.continue_segment(ya, z0, z1, substeps);
        yb = ode.continue_segment(yb, z0, z1, substeps);
        cp.fa.push_back(ya);
        cp.fb.push_back(yb);
    }
    return cp;
}

// --------------------------------------------------------------------------
// Contour residue of the second-variation component products.
// --------------------------------------------------------------------------

struct ContourConfig {
    int nodes = 256;            // per loop
    int steps_per_loop = 8192;  // RK4 steps per loop (shared across node counts)
    double radius_factor = 0.25;
};

namespace detail {

template <typename Real>
std::array<std::complex<Real>, 2> eigen_direction(const std::array<std::complex<Real>, 2>& ca,
                                                  const std::array<std::complex<Real>, 2>& cb,
                                                  std::complex<Real> eigenvalue) {
    // columns of the monodromy matrix are (ca, cb); solve (M - lambda) w = 0
    using C = std::complex<Real>;
    C m11 = ca[0] - eigenvalue, m12 = cb[0];
    C m21 = ca[1], m22 = cb[1] - eigenvalue;
    // pick the better-conditioned row
    C w1, w2;
    if (std::abs(m11) + std::abs(m12) >= std::abs(m21) + std::abs(m22)) {
        w1 = m12;
        w2 = -m11;
    } else {
        w1 = m22;
        w2 = -m21;
    }
    Real n = std::abs(w1) + std::abs(w2);
    if (!(n > Real(0))) throw WronskianDegenerate();
    return {w1 / n, w2 / n};
}

}  // namespace detail

// Branch function on the double cover: node values of the local solution with
// monodromy eigenvalue +1 (analytic) or -1 (half-integer exponent), scaled so
// the Laurent coefficient at `lead_exponent` equals 1.
template <typename Real>
struct BranchFunction {
    std::vector<std::complex<Real>> values;  // at nodes over `loops` loops
    int nodes;
    int loops;
};

template <typename Real>
BranchFunction<Real> branch_function(const CirclePair<Real>& cp, int sign, Rational lead_exponent) {
    using C = std::complex<Real>;
    int N = cp.nodes;
    // monodromy after one loop
    auto ca = cp.fa[static_cast<size_t>(N)];
    auto cb = cp.fb[static_cast<size_t>(N)];
    C lambda = sign > 0 ? C(1) : C(-1);
    auto w = detail::eigen_direction<Real>(ca, cb, lambda);
    BranchFunction<Real> f;
    f.nodes = N;
    f.loops = cp.loops;
    int total = N * cp.loops;
    f.values.resize(static_cast<size_t>(total));
    for (int k = 0; k < total; ++k)
        f.values[static_cast<size_t>(k)] = w[0] * cp.fa[static_cast<size_t>(k)][0] + w[1] * cp.fb[static_cast<size_t>(k)][0];
    // Laurent coefficient at lead_exponent over the double cover:
    // c = 1/(loops * pi * i) * sum f(z_k) (z_k - c)^(-e) ... with theta tracked
    Real e = static_cast<Real>(lead_exponent.num().convert_to<long long>()) /
             static_cast<Real>(lead_exponent.den().convert_to<long long>());
    C acc{};
    for (int k = 0; k < total; ++k) {
        Real th = Real(2) * std::numbers::pi_v<Real> * Real(k) / Real(N);
        // (z-c)^(-e) continuous in theta; dz/(z-c) contributes only i dtheta
        C pw = std::polar(std::pow(cp.radius, -e), -e * th);
        acc += f.values[static_cast<size_t>(k)] * pw;
    }
    C coeff = acc / Real(total);
    if (std::abs(coeff) < Real(1e-30)) throw WronskianDegenerate();
    for (auto& v : f.values) v /= coeff;
    return f;
}

// numeric residue of component 1..4 at z_i, (z1 - z2)-oriented like the exact engine
template <typename Real = long double>
std::complex<double> contour_residue_impl(const TrapParams& t, int which_pole, int component,
                                          const ContourConfig& cfg = {}) {
    using C = std::complex<Real>;
    DerivedQuantities d = derive(t);
    auto conv = [](const QuadExt& q) {
        auto z = q.to_complex();
        return C(static_cast<Real>(z.real()), static_cast<Real>(z.imag()));
    };
    C z1 = conv(d.z1), z2 = conv(d.z2);
    C center = which_pole == 1 ? z1 : z2;
    C other = which_pole == 1 ? z2 : z1;
    Real dist = std::min(std::abs(center - other), std::abs(center));  // 0 is also singular
    if (!(dist > Real(0))) throw PathThroughSingularity();
    Real radius = static_cast<Real>(cfg.radius_factor) * dist;
    if (radius >= dist / 2) radius = dist * Real(0.49);

    auto nve = embed_ode<Real>(build_nve(t));
    auto tangent = embed_ode<Real>(build_ve_tangent(t));
    auto cpn = continue_pair_on_circle(nve, center, radius, cfg.nodes, 2, cfg.steps_per_loop);
    auto cpt = continue_pair_on_circle(tangent, center, radius, cfg.nodes, 2, cfg.steps_per_loop);

    auto u1 = branch_function(cpn, -1, Rational(1, 2));
    auto u2 = branch_function(cpn, +1, Rational(0));
    auto v1 = branch_function(cpt, -1, Rational(1, 2));
    auto v2 = branch_function(cpt, +1, Rational(0));

    C E = conv(QuadExt(t.E)), B = conv(QuadExt(t.B)), Cc = conv(QuadExt(t.C));
    C D = conv(QuadExt(t.D)), F = conv(QuadExt(t.F));
    auto k_hat = [&](C z) { return (F * z + D) / (z * z * (E * z * z + Cc * z + B)); };
    auto k_ell = [&](C z) {
        return (Real(12) * E * z + Real(3) * Cc) / (z * z * (E * z * z + Cc * z + B));
    };

    int total = cfg.nodes * 2;
    C acc{};
    for (int k = 0; k < total; ++k) {
        Real th = Real(2) * std::numbers::pi_v<Real> * Real(k) / Real(cfg.nodes);
        C zmc = std::polar(radius, th);
        C z = center + zmc;
        C src1 = k_hat(z) * u2.values[static_cast<size_t>(k)] * v1.values[static_cast<size_t>(k)];
        C src2 = k_hat(z) * u2.values[static_cast<size_t>(k)] * u2.values[static_cast<size_t>(k)] +
                 k_ell(z) * v1.values[static_cast<size_t>(k)] * v1.values[static_cast<size_t>(k)];
        C integrand;
        switch (component) {
            case 1: integrand = src1 * u2.values[static_cast<size_t>(k)]; break;
            case 2: integrand = src1 * u1.values[static_cast<size_t>(k)]; break;
            case 3: integrand = src2 * v2.values[static_cast<size_t>(k)]; break;
            default: integrand = src2 * v1.values[static_cast<size_t>(k)]; break;
        }
        acc += integrand * zmc;  // dz = i zmc dtheta; 1/(2 pi i * 2 loops) folded below
    }
    C res = acc / Real(total);
    if (which_pole == 2) res = -res;  // (z1 - z2) orientation
    return {static_cast<double>(res.real()), static_cast<double>(res.imag())};
}

inline std::complex<double> contour_residue(const TrapParams& t, int which_pole, int component,
                                            const ContourConfig& cfg = {}) {
    return contour_residue_impl<long double>(t, which_pole, component, cfg);
}

// --------------------------------------------------------------------------
// Series-vs-numeric comparison for Frobenius expansions.
// --------------------------------------------------------------------------

template <typename Real = long double>
double series_vs_numeric(const FuchsODE& ode, const FrobeniusSeries& s, double eval_radius,
                         int steps = 4096) {
    using C = std::complex<Real>;
    if (s.point.at_infinity) throw PreconditionViolation("series_vs_numeric: finite points only");
    auto cplx = embed_ode<Real>(ode);
    auto cq = s.point.z.to_complex();
    C center(static_cast<Real>(cq.real()), static_cast<Real>(cq.imag()));

    // direction away from the other singular points
    std::vector<C> others;
    for (const auto& p : ode.singular_points())
        if (!p.at_infinity && p != s.point) {
            auto oz = p.z.to_complex();
            others.push_back(C(static_cast<Real>(oz.real()), static_cast<Real>(oz.imag())));
        }
    Real min_dist = std::numeric_limits<Real>::max();
    for (const auto& o : others) min_dist = std::min(min_dist, std::abs(center - o));
    if (!others.empty() && static_cast<Real>(eval_radius) > min_dist / 2)
        throw PreconditionViolation("series_vs_numeric: radius beyond half the singularity gap");
    C dir{1, 0};
    Real best = -1;
    for (int j = 0; j < 16; ++j) {
        Real th = Real(2) * std::numbers::pi_v<Real> * Real(j) / Real(16);
        C cand{std::cos(th), std::sin(th)};
        Real worst = std::numeric_limits<Real>::max();
        for (const auto& o : others)
            worst = std::min(worst, std::abs(center + cand * Real(eval_radius) - o));
        if (worst > best) {
            best = worst;
            dir = cand;
        }
    }

    auto eval_series = [&](Real rho) {
        C u = dir * rho;
        C upow = std::pow(u, C(static_cast<Real>(s.series.expo.to_double()), 0));
        C sum{};
        C uk{1, 0};
        for (int k = 0; k < s.series.size(); ++k) {
            auto ck = s.series.c[static_cast<size_t>(k)].to_complex();
            sum += C(static_cast<Real>(ck.real()), static_cast<Real>(ck.imag())) * uk;
            uk *= u;
        }
        return upow * sum;
    };
    auto eval_series_deriv = [&](Real rho) {
        C u = dir * rho;
        C sum{};
        for (int k = 0; k < s.series.size(); ++k) {
            Rational e = s.series.expo + Rational(k);
            C upow = std::pow(u, C(static_cast<Real>(e.to_double() - 1), 0));
            auto ck = s.series.c[static_cast<size_t>(k)].to_complex();
            sum += C(static_cast<Real>(e.to_double()), 0) *
                   C(static_cast<Real>(ck.real()), static_cast<Real>(ck.imag())) * upow;
        }
        return sum;
    };

    Real rho0 = static_cast<Real>(eval_radius) / Real(64);
    std::array<C, 2> y{eval_series(rho0), eval_series_deriv(rho0)};
    y = cplx.continue_segment(y, center + dir * rho0, center + dir * Real(eval_radius), steps);
    C direct = eval_series(static_cast<Real>(eval_radius));
    Real denom = std::max(std::abs(direct), Real(1e-300));
    return static_cast<double>(std::abs(direct - y[0]) / denom);
}

// --------------------------------------------------------------------------
// Lame-branch numeric contour residue.
// --------------------------------------------------------------------------

// residue of D xi11 (xi12)^2 at t = 0 by continuation of the Lame equations
// around a circle inside the convergence disk of the elliptic series
inline std::complex<double> lame_contour_residue(const TrapParams& t, int nodes = 256,
                                                 int steps_per_loop = 8192) {
    using Real = long double;
    using C = std::complex<Real>;
    LameData L = lame_reduce(t, t.h);
    int order = 40;
    LaurentSeries wp = weierstrass_series(L.g2, L.g3, order);
    // empirical convergence radius from the even coefficient tail
    Real rho = 1;
    {
        Real est = -1;
        for (int k = order - 2; k >= order - 10 && k >= 8; k -= 2) {
            double ck = std::abs(wp.c[static_cast<size_t>(k)].rat().to_double());
            double ck2 = std::abs(wp.c[static_cast<size_t>(k - 2)].rat().to_double());
            if (ck > 0 && ck2 > 0) {
                Real r = std::sqrt(static_cast<Real>(ck2 / ck));
                est = est < 0 ? r : std::min(est, r);
            }
        }
        rho = est > 0 ? Real(0.3) * est : Real(0.5);
    }
    std::vector<Real> wpc(static_cast<size_t>(order), Real(0));
    for (int k = 0; k < order; ++k) wpc[static_cast<size_t>(k)] = static_cast<Real>(wp.c[static_cast<size_t>(k)].rat().to_double());
    auto wp_eval = [&](C tt) {
        C t2 = tt * tt;
        C acc{};
        C p{1, 0};
        for (int k = 0; k < order; k += 2) {
            acc += wpc[static_cast<size_t>(k)] * p;
            p *= t2;
        }
        return acc / t2;
    };
    Real beta0 = static_cast<Real>((Rational(2) * t.B - Rational(2) * t.A).to_double());
    ComplexODE<Real> ode11, ode12;
    ode11.a = [](C) { return C{}; };
    ode11.b = [wp_eval, beta0](C tt) { return -(Real(12) * wp_eval(tt) + beta0); };
    ode12.a = [](C) { return C{}; };
    ode12.b = [wp_eval](C tt) { return -(Real(12) * wp_eval(tt)); };

    auto cp11 = continue_pair_on_circle(ode11, C{}, rho, nodes, 1, steps_per_loop);
    auto cp12 = continue_pair_on_circle(ode12, C{}, rho, nodes, 1, steps_per_loop);

    // identify the t^-3 branch: Laurent functionals pin coefficient(t^-3) = 1,
    // coefficient(t^4) = 0 (the resonant slot, absent from the parity-even series)
    auto laurent_coef = [&](const CirclePair<Real>& cp, const std::array<C, 2>& w, int expo) {
        C acc{};
        for (int k = 0; k < nodes; ++k) {
            Real th = Real(2) * std::numbers::pi_v<Real> * Real(k) / Real(nodes);
            C zmc = std::polar(rho, th);
            C val = w[0] * cp.fa[static_cast<size_t>(k)][0] + w[1] * cp.fb[static_cast<size_t>(k)][0];
            acc += val * std::pow(zmc, -expo);  // integrand * (z)^(-expo-1) * dz/(2 pi i)
        }
        return acc / Real(nodes);
    };
    auto pick_branch = [&](const CirclePair<Real>& cp) {
        std::array<C, 2> ea{C(1), C(0)}, eb{C(0), C(1)};
        C a1 = laurent_coef(cp, ea, -3), b1 = laurent_coef(cp, eb, -3);
        C a2 = laurent_coef(cp, ea, 4), b2 = laurent_coef(cp, eb, 4);
        C det = a1 * b2 - b1 * a2;
        if (std::abs(det) < Real(1e-30)) throw WronskianDegenerate();
        C wa = b2 / det, wb = -a2 / det;  // solve for coefficients with (1, 0) targets
        std::vector<C> vals(static_cast<size_t>(nodes));
        for (int k = 0; k < nodes; ++k)
            vals[static_cast<size_t>(k)] = wa * cp.fa[static_cast<size_t>(k)][0] + wb * cp.fb[static_cast<size_t>(k)][0];
        return vals;
    };
    auto x11 = pick_branch(cp11);
    auto x12 = pick_branch(cp12);
    Real Dv = static_cast<Real>(t.D.to_double());
    C acc{};
    for (int k = 0; k < nodes; ++k) {
        Real th = Real(2) * std::numbers::pi_v<Real> * Real(k) / Real(nodes);
        C zmc = std::polar(rho, th);
        acc += Dv * x11[static_cast<size_t>(k)] * x12[static_cast<size_t>(k)] * x12[static_cast<size_t>(k)] * zmc;
    }
    C res = acc / Real(nodes);
    return {static_cast<double>(res.real()), static_cast<double>(res.imag())};
}

// --------------------------------------------------------------------------
// Poincare sections.
// --------------------------------------------------------------------------

// section points (r, p_r) on z = 0 with p_z > 0
inline std::vector<std::array<double, 2>> poincare_section(const TrapParams& p, const FlowState& s0,
                                                           int n_crossings,
                                                           const IntegratorConfig& cfg = {},
                                                           double t_budget = 1e5) {
    FlowSystem sys = FlowSystem::from(p);
    std::vector<std::array<double, 2>> out;
    FlowState s = s0;
    double h = cfg.fixed_step;
    double t = 0;
    FlowState prev = s;
    while (static_cast<int>(out.size()) < n_crossings) {
        if (t > t_budget) throw NoCrossingFound();
        prev = s;
        s = detail::yoshida4_step(sys, s, h);
        t += h;
        if (!(std::isfinite(s.z) && std::isfinite(s.r))) throw StepFailure(t);
        if (prev.z < 0.0 && s.z >= 0.0 && s.p_z > 0.0) {
            // bisect the substep with one-step re-integration from prev
            double lo = 0.0, hi = h;
            FlowState mid = s;
            for (int it = 0; it < 200; ++it) {
                double tau = 0.5 * (lo + hi);
                mid = detail::yoshida4_step(sys, prev, tau);
                if (std::abs(mid.z) <= 1e-10) break;
                (mid.z < 0.0 ? lo : hi) = tau;
            }
            if (std::abs(mid.z) <= 1e-10 && mid.p_z > 0.0) out.push_back({mid.r, mid.p_r});
        }
    }
    return out;
}

}  // namespace trapaudit
