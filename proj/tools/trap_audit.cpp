// trap-audit: exact integrability audits for the planar trapped-ion
// Hamiltonian family, with JSON certificates and numeric corroboration.
#include <trapaudit/report.hpp>

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

using namespace trapaudit;

namespace {

struct ParamFlags {
    std::string A, B, C, D, E, F, G, h = "0";

    void attach(CLI::App* app) {
        app->add_option("--A", A, "coefficient of r^2")->required();
        app->add_option("--B", B, "coefficient of z^2")->required();
        app->add_option("--C", C, "coefficient of z^3")->required();
        app->add_option("--D", D, "coefficient of r^2 z")->required();
        app->add_option("--E", E, "coefficient of z^4")->required();
        app->add_option("--F", F, "coefficient of r^2 z^2")->required();
        app->add_option("--G", G, "coefficient of r^4")->required();
        app->add_option("--h", h, "manifold energy constant (default 0)");
    }

    TrapParams parse() const {
        auto one = [](const std::string& s, const char* name) {
            try {
                return Rational::parse(s);
            } catch (const ParseError&) {
                throw ParseError(std::string("--") + name + ": bad rational \"" + s + "\"");
            }
        };
        return TrapParams(one(A, "A"), one(B, "B"), one(C, "C"), one(D, "D"), one(E, "E"),
                          one(F, "F"), one(G, "G"), one(h, "h"));
    }
};

unsigned precision_from_env() {
    const char* env = std::getenv("TRAP_AUDIT_PRECISION");
    if (!env) return 64;
    long v = std::strtol(env, nullptr, 10);
    if (v < 53) v = 53;
    if (v > 64) v = 64;
    return static_cast<unsigned>(v);
}

void emit(const nlohmann::json& j, const std::string& path) {
    std::string text = j.dump(2) + "\n";
    if (path.empty()) {
        std::fputs(text.c_str(), stdout);
    } else {
        std::ofstream out(path, std::ios::binary);
        out << text;
    }
}

std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int run_audit(const ParamFlags& pf, bool numeric, const std::string& json_path, bool stamp,
              std::uint64_t seed) {
    TrapParams t = pf.parse();
    AuditOptions opt;
    opt.numeric_check = numeric;
    opt.precision_bits = precision_from_env();
    opt.stamp = stamp;
    opt.seed = seed;
    nlohmann::json j = audit_report(t, opt);
    emit(j, "");
    if (!json_path.empty()) emit(j, json_path);
    return 0;
}

int run_grid(const std::string& file, const std::string& out_path, int parallel, bool numeric) {
    std::ifstream in(file);
    if (!in) throw ParseError("cannot open --file " + file);
    std::vector<std::string> rows;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty()) continue;
        rows.push_back(line);
    }
    if (!rows.empty() && rows.front().rfind("A,", 0) == 0) rows.erase(rows.begin());

    AuditOptions opt;
    opt.numeric_check = numeric;
    opt.precision_bits = precision_from_env();
    std::vector<std::string> results(rows.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= rows.size()) return;
            nlohmann::json j;
            try {
                std::vector<std::string> cells;
                std::stringstream ss(rows[i]);
                std::string cell;
                while (std::getline(ss, cell, ',')) cells.push_back(cell);
                if (cells.size() != 7 && cells.size() != 8)
                    throw ParseError("row needs 7 or 8 columns, got " + std::to_string(cells.size()));
                TrapParams t(Rational::parse(cells[0]), Rational::parse(cells[1]),
                             Rational::parse(cells[2]), Rational::parse(cells[3]),
                             Rational::parse(cells[4]), Rational::parse(cells[5]),
                             Rational::parse(cells[6]),
                             cells.size() == 8 ? Rational::parse(cells[7]) : Rational(0));
                j = audit_report(t, opt);
            } catch (const std::exception& e) {
                j = nlohmann::json{{"error", e.what()}, {"row", i}};
            }
            results[i] = j.dump();
        }
    };
    int n_threads = std::max(1, std::min<int>(parallel, static_cast<int>(rows.size())));
    std::vector<std::thread> pool;
    for (int k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    std::ostringstream body;
    for (const auto& r : results) body << r << "\n";
    if (out_path.empty()) {
        std::fputs(body.str().c_str(), stdout);
    } else {
        std::ofstream out(out_path, std::ios::binary);
        out << body.str();
    }
    return 0;
}

SingPoint resolve_point(const TrapParams& t, const std::string& name) {
    if (name == "0") return SingPoint::at(QuadExt());
    if (name == "inf") return SingPoint::infinity();
    DerivedQuantities d = derive(t);
    if (name == "z1") return SingPoint::at(d.z1);
    if (name == "z2") return SingPoint::at(d.z2);
    throw ParseError("--point must be one of 0, z1, z2, inf");
}

int run_series(const ParamFlags& pf, const std::string& point, int index, int order) {
    TrapParams t = pf.parse();
    FuchsODE ode = build_nve(t);
    SingPoint pt = resolve_point(t, point);
    auto [ep, em] = indicial_exponents(ode, pt);
    const QuadExt& chosen = index == 0 ? ep : em;  // index 0 = "+" branch (larger when real)
    if (!chosen.is_rational())
        throw TrapError("IrrationalExponent", "exponent " + chosen.str() + " is not rational; "
                        "the branching verdict applies before any expansion");
    FrobeniusSeries s = frobenius_expand(ode, pt, chosen.rat(), order);
    nlohmann::json pairs = nlohmann::json::array();
    for (int k = 0; k < s.series.size(); ++k)
        pairs.push_back({(s.series.expo + Rational(k)).str(), s.series.c[static_cast<size_t>(k)].str()});
    nlohmann::json j{{"point", point},
                     {"exponent", s.series.expo.str()},
                     {"exponent_other", (index == 0 ? em : ep).str()},
                     {"truncation_order", s.truncation_order()},
                     {"pairs", pairs},
                     {"text", series_str(s)}};
    emit(j, "");
    return 0;
}

int run_residue(const ParamFlags& pf, const std::string& point, const std::string& method) {
    TrapParams t = pf.parse();
    int which = point == "z2" ? 2 : 1;
    if (point != "z1" && point != "z2") throw ParseError("--point must be z1 or z2");
    nlohmann::json j{{"point", point}, {"method", method}};
    std::optional<QuadExt> exact;
    if (method == "exact" || method == "both") {
        auto r = ve2_residues(t, which);
        exact = r[2];
        nlohmann::json comps = nlohmann::json::array();
        for (const auto& x : r) comps.push_back(x.str());
        j["exact"] = r[2].str();
        j["exact_components"] = comps;
        j["closed_form"] = closed_form_residue(t, which).str();
    }
    if (method == "numeric" || method == "both") {
        unsigned bits = precision_from_env();
        auto n = bits >= 64 ? contour_residue_impl<long double>(t, which, 3)
                            : contour_residue_impl<double>(t, which, 3);
        j["numeric"] = {{"re", n.real()}, {"im", n.imag()}};
        if (exact) {
            auto e = exact->to_complex();
            double mag = std::max(1e-12, static_cast<double>(std::abs(e)));
            j["agree"] = std::abs(n - std::complex<double>(static_cast<double>(e.real()),
                                                           static_cast<double>(e.imag()))) / mag < 1e-8;
        }
    }
    emit(j, "");
    return 0;
}

int run_trace(const ParamFlags& pf) {
    TrapParams t = pf.parse();
    FuchsODE ode = build_nve(t);
    DerivedQuantities d = derive(t);
    TraceData td = trace_data(ode);
    auto entry = [&](const SingPoint& p) {
        const TracePoint& tp = td.at(p);
        nlohmann::json e{{"delta_squared", tp.delta_squared.str()},
                         {"delta", tp.delta.str()},
                         {"sign", tp.sign}};
        switch (tp.exactness) {
            case CosExactness::RationalValue: e["exactness"] = "rational-value"; break;
            case CosExactness::AlgebraicIrrational: e["exactness"] = "algebraic-irrational"; break;
            default: e["exactness"] = "irrational-angle"; break;
        }
        if (tp.angle) e["angle"] = tp.angle->str();
        if (tp.value) e["t"] = tp.value->str();
        return e;
    };
    nlohmann::json j{{"t0", entry(SingPoint::at(QuadExt()))},
                     {"t1", entry(SingPoint::at(d.z1))},
                     {"t2", entry(SingPoint::at(d.z2))},
                     {"t_inf", entry(SingPoint::infinity())}};
    emit(j, "");
    return 0;
}

int run_simulate(const ParamFlags& pf, const std::string& init, double tmax, const std::string& out,
                 const std::string& method, double step, double tol) {
    TrapParams t = pf.parse();
    FlowState s0{};
    if (std::sscanf(init.c_str(), "%lf,%lf,%lf,%lf", &s0.r, &s0.p_r, &s0.z, &s0.p_z) != 4)
        throw ParseError("--init must be r,pr,z,pz");
    IntegratorConfig cfg;
    cfg.method = method == "rk" ? FlowMethod::AdaptiveRK : FlowMethod::Symplectic;
    cfg.fixed_step = step;
    cfg.abs_tol = cfg.rel_tol = tol;
    Trajectory tr = integrate_flow(t, s0, tmax, cfg);
    std::ostringstream csv;
    csv << "t,r,p_r,z,p_z\n";
    for (size_t i = 0; i < tr.samples.size(); ++i) {
        const auto& s = tr.samples[i];
        csv << format_g17(tr.t[i]) << "," << format_g17(s.r) << "," << format_g17(s.p_r) << ","
            << format_g17(s.z) << "," << format_g17(s.p_z) << "\n";
    }
    if (out.empty()) {
        std::fputs(csv.str().c_str(), stdout);
    } else {
        std::ofstream f(out, std::ios::binary);
        f << csv.str();
    }
    std::fprintf(stderr, "energy_drift %.3e\n", tr.energy_drift);
    return 0;
}

int run_section(const ParamFlags& pf, const std::string& energy_str, int n, const std::string& out,
                const std::string& init, double step) {
    TrapParams t = pf.parse();
    double energy = Rational::parse(energy_str).to_double();
    FlowSystem sys = FlowSystem::from(t);
    FlowState s0{};
    if (!init.empty()) {
        if (std::sscanf(init.c_str(), "%lf,%lf,%lf,%lf", &s0.r, &s0.p_r, &s0.z, &s0.p_z) != 4)
            throw ParseError("--init must be r,pr,z,pz");
    } else {
        // start on the section plane with p_z fixed by the energy
        s0.r = 0.1;
        s0.p_r = 0.0;
        s0.z = 0.0;
        double pz2 = 2.0 * (energy - sys.potential(s0.r, s0.z));
        if (pz2 <= 0) throw NoCrossingFound();
        s0.p_z = std::sqrt(pz2);
        s0.z = -1e-9;  // nudge below the plane so the first crossing is counted
    }
    IntegratorConfig cfg;
    cfg.fixed_step = step;
    auto pts = poincare_section(t, s0, n, cfg);
    std::ostringstream csv;
    csv << "r,p_r\n";
    for (const auto& p : pts) csv << format_g17(p[0]) << "," << format_g17(p[1]) << "\n";
    if (out.empty()) {
        std::fputs(csv.str().c_str(), stdout);
    } else {
        std::ofstream f(out, std::ios::binary);
        f << csv.str();
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact integrability auditor for the planar trapped-ion Hamiltonian family"};
    app.require_subcommand(1);
    app.set_help_flag("--help", "print help");  // keep -h free: --h is a model parameter

    ParamFlags pf_audit, pf_series, pf_residue, pf_trace, pf_sim, pf_sec;

    auto sub = [&](const char* name, const char* desc) {
        auto* s = app.add_subcommand(name, desc);
        s->set_help_flag("--help", "print help");
        return s;
    };

    auto* audit = sub("audit", "classify one parameter set");
    pf_audit.attach(audit);
    bool numeric = false, stamp = false;
    std::uint64_t seed = 0;
    std::string json_path;
    audit->add_flag("--numeric-check", numeric, "cross-check residues with the contour oracle");
    audit->add_option("--json", json_path, "also write the report to this path");
    audit->add_flag("--stamp", stamp, "include a timestamp (breaks byte-determinism)");
    audit->add_option("--seed", seed, "seed metadata echoed into the report");

    auto* grid = sub("grid", "classify a CSV of parameter rows");
    std::string grid_file, grid_out;
    int grid_parallel = 1;
    bool grid_numeric = false;
    grid->add_option("--file", grid_file, "CSV with columns A,B,C,D,E,F,G[,h]")->required();
    grid->add_option("--out", grid_out, "JSONL output path (stdout when omitted)");
    grid->add_option("--parallel", grid_parallel, "worker threads");
    grid->add_flag("--numeric-check", grid_numeric, "cross-check residues numerically");

    auto* series = sub("series", "Frobenius expansion at a singular point");
    pf_series.attach(series);
    std::string series_point = "z1";
    int series_index = 0, series_order = 12;
    series->add_option("--point", series_point, "0 | z1 | z2 | inf");
    series->add_option("--exponent-index", series_index, "0 = '+' branch, 1 = '-' branch");
    series->add_option("--order", series_order, "truncation order");

    auto* residue = sub("residue", "second-variation residues at z1 or z2");
    pf_residue.attach(residue);
    std::string res_point = "z1", res_method = "exact";
    residue->add_option("--point", res_point, "z1 | z2");
    residue->add_option("--method", res_method, "exact | numeric | both");

    auto* trace = sub("trace", "monodromy trace data at the singular points");
    pf_trace.attach(trace);

    auto* simulate = sub("simulate", "integrate the flow, CSV output");
    pf_sim.attach(simulate);
    std::string sim_init = "0.1,0,0.1,0", sim_out, sim_method = "symplectic";
    double sim_tmax = 100.0, sim_step = 1e-3, sim_tol = 1e-12;
    simulate->add_option("--init", sim_init, "initial state r,pr,z,pz");
    simulate->add_option("--tmax", sim_tmax, "integration time");
    simulate->add_option("--out", sim_out, "CSV path (stdout when omitted)");
    simulate->add_option("--method", sim_method, "symplectic | rk");
    simulate->add_option("--step", sim_step, "fixed step for the symplectic method");
    simulate->add_option("--tol", sim_tol, "tolerance for the adaptive method");

    auto* section = sub("section", "Poincare section on z=0, p_z>0");
    pf_sec.attach(section);
    double sec_step = 2e-3;
    int sec_n = 100;
    std::string sec_out, sec_init, sec_energy = "1/2";
    section->add_option("--energy", sec_energy, "energy level for the default initial state (rational)");
    section->add_option("--n", sec_n, "number of crossings");
    section->add_option("--out", sec_out, "CSV path (stdout when omitted)");
    section->add_option("--init", sec_init, "explicit initial state r,pr,z,pz");
    section->add_option("--step", sec_step, "integrator step");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (audit->parsed()) return run_audit(pf_audit, numeric, json_path, stamp, seed);
        if (grid->parsed()) return run_grid(grid_file, grid_out, grid_parallel, grid_numeric);
        if (series->parsed()) return run_series(pf_series, series_point, series_index, series_order);
        if (residue->parsed()) return run_residue(pf_residue, res_point, res_method);
        if (trace->parsed()) return run_trace(pf_trace);
        if (simulate->parsed())
            return run_simulate(pf_sim, sim_init, sim_tmax, sim_out, sim_method, sim_step, sim_tol);
        if (section->parsed()) return run_section(pf_sec, sec_energy, sec_n, sec_out, sec_init, sec_step);
    } catch (const ParseError& e) {
        nlohmann::json j{{"error", e.what()}, {"kind", "parse"}};
        std::fputs((j.dump() + "\n").c_str(), stderr);
        return 2;
    } catch (const TrapError& e) {
        nlohmann::json j{{"error", e.what()}, {"kind", e.tag}};
        std::fputs((j.dump() + "\n").c_str(), stderr);
        return 3;
    } catch (const std::exception& e) {
        nlohmann::json j{{"error", e.what()}, {"kind", "internal"}};
        std::fputs((j.dump() + "\n").c_str(), stderr);
        return 3;
    }
    return 2;
}
