// Serial vs OpenMP timings for the data-parallel kernels; the results must
// match bit for bit, only the wall time may differ.
#include <perturbex/gdms.hpp>
#include <perturbex/thermo.hpp>

#include <chrono>
#include <cstdio>

using namespace perturbex;

namespace {

using clock_type = std::chrono::steady_clock;

template <class F>
double time_ms(F&& f) {
    const auto t0 = clock_type::now();
    f();
    const auto t1 = clock_type::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

void report(const char* name, double serial_ms, double parallel_ms, bool identical) {
    std::printf("%-28s serial %8.1f ms   openmp %8.1f ms   speedup %.2fx   identical=%s\n", name, serial_ms,
                parallel_ms, serial_ms / parallel_ms, identical ? "yes" : "NO");
}

}  // namespace

int main() {
    std::printf("threads available: %d\n", par::max_threads());

    {
        Eigen::MatrixXi a(2, 2);
        a << 1, 1, 1, 0;
        auto s = build_shift(a);
        auto t = spectral_triplet(build_ruelle(DepthFn(s, 4, 0.1)));
        NormOptions o;
        o.samples = 4000;
        NormBracket rs, rp;
        o.exec = par::Exec::serial;
        const double ts = time_ms([&] { rs = op_norm_ftheta(s, t.depth, t.S, 0.5, o); });
        o.exec = par::Exec::openmp;
        const double tp = time_ms([&] { rp = op_norm_ftheta(s, t.depth, t.S, 0.5, o); });
        report("norm bracketing", ts, tp, rs.lower == rp.lower && rs.upper == rp.upper);
    }

    {
        Eigen::MatrixXi a(3, 3);
        a << 1, 1, 1, 1, 1, 0, 1, 0, 1;
        auto s = build_shift(a);
        const int count = s->words(2).count();
        Eigen::VectorXd v(count);
        for (int i = 0; i < count; ++i) v(i) = 0.1 * std::sin(1.0 + i);
        auto pf = make_potential_family(DepthFn(s, 2, v), {DepthFn(s, 2, 0.5 * v), DepthFn(s, 2, 0.25 * v),
                                                           DepthFn(s, 2, 0.1 * v)});
        auto fam = build_family(pf);
        auto r = expand_all(fam);
        std::vector<double> grid;
        double e = 0.2;
        for (int i = 0; i < 16; ++i) {
            grid.push_back(e);
            e *= 0.6;
        }
        DepthFn f(s, 1, Eigen::Vector3d(1.0, 0.0, 0.0));
        DiagnosticsReport ds, dp;
        DiagnosticsOptions o;
        o.exec = par::Exec::serial;
        const double ts = time_ms([&] { ds = convergence_diagnostics(fam, r, grid, f, o); });
        o.exec = par::Exec::openmp;
        const double tp = time_ms([&] { dp = convergence_diagnostics(fam, r, grid, f, o); });
        bool same = ds.rows.size() == dp.rows.size();
        for (std::size_t i = 0; same && i < ds.rows.size(); ++i)
            same = ds.rows[i].magnitudes == dp.rows[i].magnitudes;
        report("remainder grid sweep", ts, tp, same);
    }

    {
        GdmsEdge e0, e1;
        e0.from = e0.to = 0;
        e0.map.kind = EdgeMap::Kind::moebius;
        e0.map.ma = ScalarJet(std::vector<double>{1.0});
        e0.map.mb = ScalarJet(std::vector<double>{0.0});
        e0.map.mc = ScalarJet(std::vector<double>{1.0});
        e0.map.md = ScalarJet(std::vector<double>{2.0, 1.0});
        e1.from = e1.to = 0;
        e1.map.kind = EdgeMap::Kind::moebius;
        e1.map.ma = ScalarJet(std::vector<double>{1.0});
        e1.map.mb = ScalarJet(std::vector<double>{2.0});
        e1.map.mc = ScalarJet(std::vector<double>{1.0});
        e1.map.md = ScalarJet(std::vector<double>{3.0});
        auto sys = make_gdms({{0.0, 1.0}}, {e0, e1}, 4);
        PotentialFamily ps, pp;
        const double ts = time_ms([&] { ps = gdms_potential_family(sys, 12, par::Exec::serial); });
        const double tp = time_ms([&] { pp = gdms_potential_family(sys, 12, par::Exec::openmp); });
        bool same = ps.base.values == pp.base.values;
        for (std::size_t k = 0; same && k < ps.coeff.size(); ++k) same = ps.coeff[k].values == pp.coeff[k].values;
        report("cylinder jet assembly", ts, tp, same);
    }

    return 0;
}
