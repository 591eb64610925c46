// ococert: certify, sweep and fuzz front-end.
//
// Exit codes: 0 feasible / no violation, 2 certified infeasible, 1 usage,
// input or numerical error (and soundness violations in fuzz).

#include "oco/certifier.hpp"
#include "oco/matrix_io.hpp"
#include "oco/simulator.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace oco;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;

struct ClassArgs {
    double kappa = 1.0;
    std::string norm = "fixed-m";
    double m = 2.0;

    model::FunctionClass make(double k) const {
        if (norm == "unit-sum") return model::FunctionClass::from_kappa_unit_sum(k);
        return model::FunctionClass::from_kappa_fixed_m(k, m);
    }
};

void add_class_options(CLI::App* app, ClassArgs& c, bool with_kappa) {
    if (with_kappa) app->add_option("--kappa", c.kappa, "condition ratio L/m")->check(CLI::Range(1.0, 1e12));
    app->add_option("--norm", c.norm, "class normalization: fixed-m (m given by --m) or unit-sum (m+L=2)")
        ->check(CLI::IsMember({"fixed-m", "unit-sum"}));
    app->add_option("--m", c.m, "strong convexity for --norm fixed-m")->check(CLI::PositiveNumber);
}

struct AlgArgs {
    std::string alg = "ogd";
    std::string file;
    bool unconstrained = false;
    int d = 0;  // 0: the file's value, or default_d for zoo ids
    int default_d = 1;

    model::AlgorithmRealization make(const model::FunctionClass& fc) const {
        if (!file.empty()) {
            model::AlgorithmRealization r = model::read_realization_file(file);
            if (d > 0) r.d = d;
            return r;
        }
        return model::make_zoo(alg, fc, d > 0 ? d : default_d, !unconstrained);
    }
};

void add_alg_options(CLI::App* app, AlgArgs& a) {
    auto* id = app->add_option("--alg", a.alg, "zoo id: ogd, ogd2, ogd10, onm, oagd");
    app->add_option("--alg-file", a.file, "realization in the plain-text matrix format")->excludes(id);
    app->add_flag("--unconstrained", a.unconstrained, "zoo realization without cone channels");
    app->add_option("--d", a.d, "problem dimension")->check(CLI::PositiveNumber);
}

iqc::Mode parse_mode(const std::string& s) { return s == "variational" ? iqc::Mode::Variational : iqc::Mode::Pointwise; }

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

int worker_count() {
    if (const char* env = std::getenv("OCO_WORKERS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs job(i) for i in [0, n) on a small pool; results are stored by index.
template <class Job>
void parallel_for(int n, Job job) {
    const int workers = std::min(worker_count(), std::max(n, 1));
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) job(i);
        });
    }
    for (auto& t : pool) t.join();
}

// ---- certify ------------------------------------------------------------------

const char* kCertHeader =
    "alg,mode,kappa,m,L,d,outcome,status,lam_max_P,gamma1,gamma2,gamma3,lmi_residual,margin,iterations";

std::string cert_row(const std::string& alg, const model::FunctionClass& fc, int d,
                     const cert::RegretCertificate& c) {
    std::ostringstream os;
    const bool pw = c.mode == iqc::Mode::Pointwise;
    os << alg << ',' << iqc::to_string(c.mode) << ',' << fmt(fc.kappa()) << ',' << fmt(fc.m) << ',' << fmt(fc.L)
       << ',' << d << ',' << cert::to_string(c.outcome) << ',' << c.stats.status << ',';
    if (c.feasible && pw) os << fmt(c.lam_max_P);
    os << ',';
    if (c.feasible && !pw) os << fmt(c.gamma1) << ',' << fmt(c.gamma2) << ',' << fmt(c.gamma3);
    else os << ",,";
    os << ',' << fmt(c.lmi_residual) << ',' << (c.feasible ? "" : fmt(c.margin)) << ',' << c.stats.iterations;
    return os.str();
}

struct CertifyArgs {
    AlgArgs alg;
    ClassArgs cls;
    std::string mode = "pointwise";
    cert::VariationalOptions weights;
    bool show_p = false;
};

int cmd_certify(const CertifyArgs& a) {
    const model::FunctionClass fc = a.cls.make(a.cls.kappa);
    model::AlgorithmRealization r = a.alg.make(fc);
    model::require_structure(r);
    cert::CertifyOptions opt;
    opt.variational = a.weights;
    const cert::RegretCertificate c = cert::certify(r, fc, parse_mode(a.mode), opt);
    std::cout << kCertHeader << '\n' << cert_row(a.alg.file.empty() ? a.alg.alg : r.name, fc, r.d, c) << '\n';
    if (a.show_p && c.feasible) {
        std::cout << "# P\n";
        for (int i = 0; i < c.P.rows(); ++i) {
            for (int j = 0; j < c.P.cols(); ++j) std::cout << (j ? " " : "") << fmt(c.P(i, j));
            std::cout << '\n';
        }
    }
    if (c.outcome == cert::Outcome::Infeasible) return kExitInfeasible;
    if (c.outcome == cert::Outcome::SolverFailure) {
        std::cerr << "solver failure: " << c.stats.status << ", gap " << c.stats.gap << '\n';
        return kExitError;
    }
    return kExitOk;
}

// ---- sweep --------------------------------------------------------------------

struct SweepArgs {
    std::vector<std::string> algs{"ogd"};
    ClassArgs cls;
    std::string mode = "pointwise";
    double kmin = 1.0, kmax = 100.0;
    int count = 50;
    cert::VariationalOptions weights;
    std::string out = "-";
    bool timing = false;
    bool unconstrained = false;
};

std::vector<double> log_grid(double a, double b, int n) {
    if (!(a >= 1.0) || !(b >= a) || n < 2) throw std::invalid_argument("sweep grid needs 1 <= kmin <= kmax and count >= 2");
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = std::exp(std::log(a) + (std::log(b) - std::log(a)) * i / (n - 1));
    g.front() = a;
    g.back() = b;
    return g;
}

const char* kSweepHeader = "alg,mode,kappa,m,L,feasible,lam_max_P,gamma1,gamma2,gamma3,status,iterations,seconds";

int cmd_sweep(const SweepArgs& a) {
    std::vector<std::string> algs = a.algs;
    if (algs.size() == 1 && algs[0] == "all") algs = model::zoo_ids();
    const std::vector<double> grid = log_grid(a.kmin, a.kmax, a.count);

    std::ofstream file;
    if (a.out != "-") {
        file.open(a.out, std::ios::binary);
        if (!file) throw std::runtime_error("cannot write '" + a.out + "'");
    }
    std::ostream& os = a.out == "-" ? std::cout : file;

    const int n = static_cast<int>(algs.size() * grid.size());
    std::vector<std::string> rows(n);
    std::vector<std::string> errors(n);
    const iqc::Mode mode = parse_mode(a.mode);
    parallel_for(n, [&](int i) {
        const std::string& id = algs[i / grid.size()];
        const model::FunctionClass fc = a.cls.make(grid[i % grid.size()]);
        std::ostringstream row;
        try {
            model::AlgorithmRealization r = model::make_zoo(id, fc, 1, !a.unconstrained);
            cert::CertifyOptions opt;
            opt.variational = a.weights;
            const cert::RegretCertificate c = cert::certify(r, fc, mode, opt);
            row << id << ',' << a.mode << ',' << fmt(fc.kappa()) << ',' << fmt(fc.m) << ',' << fmt(fc.L) << ','
                << (c.feasible ? 1 : 0) << ',';
            if (c.feasible && mode == iqc::Mode::Pointwise) row << fmt(c.lam_max_P);
            row << ',';
            if (c.feasible && mode == iqc::Mode::Variational) {
                row << fmt(c.gamma1) << ',' << fmt(c.gamma2) << ',' << fmt(c.gamma3);
            } else {
                row << ",,";
            }
            row << ',' << (c.feasible ? c.stats.status : cert::to_string(c.outcome)) << ',' << c.stats.iterations
                << ',';
            if (a.timing) row << fmt(c.stats.seconds);
        } catch (const std::exception& e) {
            errors[i] = id + " kappa " + fmt(fc.kappa()) + ": " + e.what();
        }
        rows[i] = row.str();
    });
    for (const auto& e : errors) {
        if (!e.empty()) {
            std::cerr << e << '\n';
            return kExitError;
        }
    }
    os << kSweepHeader << '\n';
    for (const auto& r : rows) os << r << '\n';
    os.flush();
    if (!os) throw std::runtime_error("write to '" + a.out + "' failed");
    return kExitOk;
}

// ---- fuzz ---------------------------------------------------------------------

struct FuzzArgs {
    AlgArgs alg;
    ClassArgs cls;
    std::string mode = "variational";
    int seeds = 100;
    std::uint64_t seed0 = 0;
    int T = 100;
    double drift = 0.1;
    double lo = -1.0, hi = 1.0;
    bool boundary = false;
    bool corrupt = false;
    std::string csv;
};

int cmd_fuzz(const FuzzArgs& a) {
    const model::FunctionClass fc = a.cls.make(a.cls.kappa);
    model::AlgorithmRealization r = a.alg.make(fc);
    model::require_structure(r);
    const iqc::Mode mode = parse_mode(a.mode);
    cert::RegretCertificate c = cert::certify(r, fc, mode);
    if (c.outcome == cert::Outcome::Infeasible) {
        std::cerr << "certificate infeasible at kappa " << fmt(fc.kappa()) << " (margin " << fmt(c.margin) << ")\n";
        return kExitInfeasible;
    }
    if (!c.feasible) {
        std::cerr << "solver failure: " << c.stats.status << '\n';
        return kExitError;
    }
    if (a.corrupt) c = cert::corrupt_certificate(c);

    const sim::Box box = sim::Box::cube(a.lo, a.hi);
    sim::ScenarioOptions so;
    so.interior = !a.boundary;
    std::vector<sim::SlackReport> reps(a.seeds);
    parallel_for(a.seeds, [&](int i) {
        const auto sc = sim::generate_scenario(a.seed0 + i, a.T, r.d, fc, a.drift, box, so);
        const auto tr = sim::run_algorithm(r, sc);
        const auto mt = sim::regularity_metrics(sc, tr, r.U);
        reps[i] = sim::compare_bound(r, sc, tr, mt, c);
    });

    if (!a.csv.empty()) {
        std::ofstream f(a.csv, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write '" + a.csv + "'");
        f << "seed,regret,bound,slack,init_norm,violated\n";
        for (const auto& s : reps) {
            f << s.seed << ',' << fmt(s.regret) << ',' << fmt(s.bound) << ',' << fmt(s.slack) << ','
              << fmt(s.init_norm) << ',' << (s.violated ? 1 : 0) << '\n';
        }
    }
    double min_slack = std::numeric_limits<double>::infinity();
    int violations = 0;
    for (const auto& s : reps) {
        min_slack = std::min(min_slack, s.slack);
        if (s.violated) {
            ++violations;
            std::cout << "violation seed " << s.seed << " regret " << fmt(s.regret) << " bound " << fmt(s.bound)
                      << '\n';
        }
    }
    std::cout << "runs " << a.seeds << " violations " << violations << " min_slack " << fmt(min_slack) << '\n';
    return violations == 0 ? kExitOk : kExitError;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IQC-based dynamic regret certificates for online optimization algorithms"};
    app.require_subcommand(1);

    CertifyArgs ca;
    auto* certify = app.add_subcommand("certify", "certify one algorithm at one condition ratio");
    add_alg_options(certify, ca.alg);
    add_class_options(certify, ca.cls, true);
    certify->add_option("--mode", ca.mode)->check(CLI::IsMember({"pointwise", "variational"}));
    certify->add_option("--k1", ca.weights.k1)->check(CLI::NonNegativeNumber);
    certify->add_option("--k2", ca.weights.k2)->check(CLI::NonNegativeNumber);
    certify->add_option("--k3", ca.weights.k3)->check(CLI::NonNegativeNumber);
    certify->add_flag("--show-P", ca.show_p, "print P after the record");

    SweepArgs sa;
    auto* sweep = app.add_subcommand("sweep", "certify over a log-spaced grid of condition ratios, CSV out");
    sweep->add_option("--alg", sa.algs, "zoo ids, or 'all'");
    add_class_options(sweep, sa.cls, false);
    sweep->add_option("--mode", sa.mode)->check(CLI::IsMember({"pointwise", "variational"}));
    sweep->add_option("--kappa-min", sa.kmin);
    sweep->add_option("--kappa-max", sa.kmax);
    sweep->add_option("--count", sa.count);
    sweep->add_option("--k1", sa.weights.k1)->check(CLI::NonNegativeNumber);
    sweep->add_option("--k2", sa.weights.k2)->check(CLI::NonNegativeNumber);
    sweep->add_option("--k3", sa.weights.k3)->check(CLI::NonNegativeNumber);
    sweep->add_option("--out", sa.out, "output file, '-' for stdout");
    sweep->add_flag("--timing", sa.timing, "fill the seconds column (makes output run-dependent)");
    sweep->add_flag("--unconstrained", sa.unconstrained);

    FuzzArgs fa;
    fa.alg.default_d = 2;
    auto* fuzz = app.add_subcommand("fuzz", "certify, simulate random scenarios and compare regret to the bound");
    add_alg_options(fuzz, fa.alg);
    add_class_options(fuzz, fa.cls, true);
    fuzz->add_option("--mode", fa.mode)->check(CLI::IsMember({"pointwise", "variational"}));
    fuzz->add_option("--seeds", fa.seeds)->check(CLI::PositiveNumber);
    fuzz->add_option("--seed0", fa.seed0);
    fuzz->add_option("--T", fa.T)->check(CLI::PositiveNumber);
    fuzz->add_option("--drift", fa.drift)->check(CLI::NonNegativeNumber);
    fuzz->add_option("--box-lo", fa.lo);
    fuzz->add_option("--box-hi", fa.hi);
    fuzz->add_flag("--boundary", fa.boundary, "let minimizers sit on the boundary of the box");
    fuzz->add_flag("--corrupt", fa.corrupt, "halve gamma1 before comparing (mutation check)");
    fuzz->add_option("--csv", fa.csv, "per-seed results");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitError;
    }

    try {
        if (*certify) return cmd_certify(ca);
        if (*sweep) return cmd_sweep(sa);
        if (*fuzz) return cmd_fuzz(fa);
    } catch (const model::StructureError& e) {
        std::cerr << "structure check failed (" << e.assumption() << "): " << e.what() << '\n';
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
