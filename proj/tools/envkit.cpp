// envkit — envelope operators over sampled functions on product metric
// spaces: catalog sampling, sup/inf ball envelopes, the monotone
// lower/upper/inserted approximation pipeline, semicontinuity verification,
// and CSV reports.
//
// Exit codes: 0 success, 1 validation/usage error, 2 verification failure.
// Errors go to stderr with the prefix "envkit:error:". Outputs are written
// atomically and contain no timestamps, so identical invocations on identical
// inputs are byte-identical.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "envkit/catalog.hpp"
#include "envkit/envelope.hpp"
#include "envkit/io.hpp"
#include "envkit/sequence.hpp"
#include "envkit/verify.hpp"

namespace {

using namespace envkit;
namespace fs = std::filesystem;

double parse_number(std::string_view text, const std::string& what) {
    double v = 0.0;
    const char* b = text.data();
    const char* e = b + text.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc{} || p != e)
        fail(ErrorKind::InvalidArgument, "cannot parse " + what + " '" + std::string(text) + "'");
    return v;
}

// Inline grid syntax: x=lin(a,b,n);y=lin(a,b,n), one clause per axis,
// at least one x and one y clause.
ProductGrid parse_grid_spec(const std::string& spec) {
    std::vector<AxisGrid> xs, ys;
    std::size_t pos = 0;
    while (pos <= spec.size()) {
        std::size_t next = spec.find(';', pos);
        std::string clause = spec.substr(pos, next == std::string::npos ? next : next - pos);
        pos = next == std::string::npos ? spec.size() + 1 : next + 1;
        if (clause.empty()) continue;
        bool is_x = clause.starts_with("x=");
        bool is_y = clause.starts_with("y=");
        if ((!is_x && !is_y) || !clause.ends_with(")") ||
            clause.compare(2, 4, "lin(") != 0)
            fail(ErrorKind::InvalidArgument,
                 "bad grid clause '" + clause + "' (expected x=lin(a,b,n) or y=lin(a,b,n))");
        std::string args = clause.substr(6, clause.size() - 7);
        std::size_t c1 = args.find(',');
        std::size_t c2 = c1 == std::string::npos ? std::string::npos : args.find(',', c1 + 1);
        if (c2 == std::string::npos || args.find(',', c2 + 1) != std::string::npos)
            fail(ErrorKind::InvalidArgument, "grid clause '" + clause + "' needs lin(a,b,n)");
        double a = parse_number(std::string_view(args).substr(0, c1), "grid bound");
        double b = parse_number(std::string_view(args).substr(c1 + 1, c2 - c1 - 1), "grid bound");
        double nd = parse_number(std::string_view(args).substr(c2 + 1), "grid size");
        if (!(nd >= 2.0) || nd != static_cast<double>(static_cast<std::size_t>(nd)))
            fail(ErrorKind::InvalidArgument,
                 "grid size in '" + clause + "' must be an integer >= 2");
        (is_x ? xs : ys).push_back(linspace_axis(a, b, static_cast<std::size_t>(nd)));
    }
    if (xs.empty() || ys.empty())
        fail(ErrorKind::InvalidArgument, "grid spec needs at least one x= and one y= clause");
    return ProductGrid(std::move(xs), std::move(ys));
}

MetricSpec parse_metric_pair(const std::string& text) {
    std::size_t comma = text.find(',');
    if (comma == std::string::npos || text.find(',', comma + 1) != std::string::npos)
        fail(ErrorKind::InvalidArgument,
             "metric must be '<linf|l2>,<linf|l2>', got '" + text + "'");
    return MetricSpec{metric_from_string(text.substr(0, comma)),
                      metric_from_string(text.substr(comma + 1))};
}

void ensure_parent_dir(const fs::path& path) {
    fs::path parent = path.parent_path();
    if (parent.empty()) return;
    std::error_code ec;
    fs::create_directories(parent, ec);
    if (ec)
        fail(ErrorKind::Io, "cannot create directory '" + parent.string() + "': " + ec.message());
}

fs::path with_suffix(const fs::path& path, const char* suffix) {
    fs::path out = path;
    out.replace_extension();
    out += suffix;
    return out;
}

// Shrinking radius schedule alpha, alpha/2, ..., alpha/2^(count-1).
std::vector<double> schedule_from(double alpha, int count = 8) {
    std::vector<double> radii(static_cast<std::size_t>(count));
    double r = alpha;
    for (auto& out : radii) {
        out = r;
        r /= 2.0;
    }
    return radii;
}

struct CatalogArgs {
    std::string name, grid, metric = "linf,linf", out;
    double c = 1.0;
    bool c_given = false;
    bool metric_given = false;
};

int run_catalog(const CatalogArgs& a) {
    std::string name = a.name;
    if (a.c_given) {
        if (name != "constant")
            fail(ErrorKind::InvalidArgument, "--c only applies to --name constant");
        name = "constant(" + format_double(a.c) + ")";
    }
    ProductGrid grid = [&] {
        if (a.grid.find("lin(") != std::string::npos) return parse_grid_spec(a.grid);
        return io::load_function(a.grid).grid();
    }();
    MetricSpec metric = [&] {
        if (!a.metric_given && a.grid.find("lin(") == std::string::npos)
            return io::load_function(a.grid).metric();
        return parse_metric_pair(a.metric);
    }();
    SampledFunction f = from_catalog(name, grid, metric);
    ensure_parent_dir(a.out);
    io::save_function(f, a.out);
    std::cout << "wrote " << a.out << " (" << f.grid().node_count() << " nodes, " << f.name()
              << ")\n";
    return 0;
}

struct EnvelopeArgs {
    std::string in, bound, var, kernel = "auto", out;
    double alpha = 0.0;
};

int run_envelope(const EnvelopeArgs& a) {
    SampledFunction f = io::load_function(a.in);
    Bound bound = [&] {
        if (a.bound == "sup") return Bound::Sup;
        if (a.bound == "inf") return Bound::Inf;
        fail(ErrorKind::InvalidArgument, "--bound must be sup or inf, got '" + a.bound + "'");
    }();
    Variable var = [&] {
        if (a.var == "first") return Variable::First;
        if (a.var == "second") return Variable::Second;
        fail(ErrorKind::InvalidArgument, "--var must be first or second, got '" + a.var + "'");
    }();
    KernelChoice kc = [&] {
        if (a.kernel == "auto") return KernelChoice::Auto;
        if (a.kernel == "naive") return KernelChoice::Naive;
        if (a.kernel == "separable") return KernelChoice::Separable;
        fail(ErrorKind::InvalidArgument,
             "--kernel must be auto, naive or separable, got '" + a.kernel + "'");
    }();
    EnvelopeResult r = ball_envelope(f, var, bound, a.alpha, kc);
    ensure_parent_dir(a.out);
    io::save_envelope(r, a.out);
    std::cout << "wrote " << a.out << " (kernel=" << to_string(r.kernel) << ")\n";
    return 0;
}

struct SequenceArgs {
    std::string in, outdir;
    int n = 0;
    double rho = 0.0;
    bool rho_given = false;
};

int run_sequence(const SequenceArgs& a) {
    SampledFunction f = io::load_function(a.in);
    double rho = a.rho_given ? a.rho : default_radius_scale(f.grid());
    EnvelopeSequence seq = envelope_sequence(f, a.n, rho);
    io::save_sequence(seq, a.outdir);
    std::cout << "wrote " << (fs::path(a.outdir) / "manifest.json").string() << " ("
              << seq.steps.size() << " steps, rho=" << format_double(rho) << ")\n";
    return 0;
}

struct InsertArgs {
    std::string lower, upper, out;
};

int run_insert(const InsertArgs& a) {
    SampledFunction lower = io::load_function(a.lower);
    SampledFunction upper = io::load_function(a.upper);
    SampledFunction mid = hahn_insert(lower, upper);
    ensure_parent_dir(a.out);
    io::save_function(mid, a.out);
    std::cout << "wrote " << a.out << "\n";
    return 0;
}

struct TruncateArgs {
    std::string in, out;
    double level = 0.0;
};

int run_truncate(const TruncateArgs& a) {
    SampledFunction f = io::load_function(a.in);
    SampledFunction g = truncate(f, a.level);
    ensure_parent_dir(a.out);
    io::save_function(g, a.out);
    std::cout << "wrote " << a.out << "\n";
    return 0;
}

struct VerifyArgs {
    std::string in, mode, out;
    double alpha = 0.0, tol = 0.0;
};

int run_verify(const VerifyArgs& a) {
    SampledFunction f = io::load_function(a.in);
    if (!(a.alpha > 0.0) || !std::isfinite(a.alpha))
        fail(ErrorKind::InvalidArgument, "--alpha must be positive and finite");
    if (!(a.tol > 0.0) || !std::isfinite(a.tol))
        fail(ErrorKind::InvalidArgument, "--tol must be positive and finite");

    DeficiencyMode mode;
    SemicontinuitySide side;
    bool joint_envelope = false;
    if (a.mode == "lsc-first") {
        mode = DeficiencyMode::SeparateFirst;
        side = SemicontinuitySide::Lower;
    } else if (a.mode == "usc-second") {
        mode = DeficiencyMode::SeparateSecond;
        side = SemicontinuitySide::Upper;
    } else if (a.mode == "joint-lsc-envelope") {
        mode = DeficiencyMode::Joint;
        side = SemicontinuitySide::Lower;
        joint_envelope = true;
    } else {
        fail(ErrorKind::InvalidArgument,
             "--mode must be lsc-first, usc-second or joint-lsc-envelope, got '" + a.mode + "'");
    }

    std::vector<double> radii = schedule_from(a.alpha);
    if (!analytic_source_for(f)) {
        radii = floor_schedule_to_grid(radii, f.grid(), mode);
        if (radii.empty())
            fail(ErrorKind::InvalidArgument,
                 "every radius in the schedule is below the grid resolution; "
                 "increase --alpha or refine the grid");
    }
    CheckResult result = joint_envelope
                             ? verify_envelope_joint_lsc(f, a.alpha, radii, a.tol)
                             : check_semicontinuity(f, mode, side, radii, a.tol);

    ensure_parent_dir(a.out);
    io::write_verdict_json(result, mode, side, radii, f.grid(), a.out);
    io::write_profile_csv(result.profile, f.grid(), with_suffix(a.out, "_profile.csv"));

    const auto& v = result.verdict;
    std::cout << "verify " << a.mode << " (" << (result.profile.analytic ? "analytic" : "sampled")
              << "): " << (v.passed ? "passed" : "FAILED") << " trend="
              << format_double(v.trend) << " tol=" << format_double(v.tol);
    if (v.witness) std::cout << " witness=" << node_label(f.grid(), f.grid().to_flat(v.witness->node));
    std::cout << "\n";
    return v.passed ? 0 : 2;
}

struct ReportArgs {
    std::string manifest, out;
    double tol = 0.0;
};

int run_report(const ReportArgs& a) {
    EnvelopeSequence seq = io::load_sequence(a.manifest);
    ConvergenceReport rep = convergence_report(seq, a.tol);
    for (std::size_t i = 1; i < rep.per_n.size(); ++i)
        if (rep.per_n[i].max_gap > rep.per_n[i - 1].max_gap)
            fail(ErrorKind::Schema, "max_gap column is not nonincreasing at step " +
                                        std::to_string(rep.per_n[i].n) +
                                        "; sequence data is inconsistent");
    ensure_parent_dir(a.out);
    io::write_convergence_csv(rep, a.out);
    io::write_gap_csv(rep, seq.base.grid(), with_suffix(a.out, "_nodes.csv"));
    std::cout << "wrote " << a.out << " (" << rep.per_n.size() << " steps); converged "
              << rep.converged_count << "/" << (rep.converged_count + rep.open_count)
              << " nodes at tol=" << format_double(rep.tol) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"semicontinuous envelope operators over sampled functions"};
    app.require_subcommand(1);

    CatalogArgs cat;
    auto* sc_cat = app.add_subcommand("catalog", "sample a catalog function onto a grid");
    sc_cat->add_option("--name", cat.name, "catalog identifier")->required();
    sc_cat->add_option("--grid", cat.grid, "inline spec x=lin(a,b,n);y=lin(a,b,n) or a function file")
        ->required();
    auto* metric_opt = sc_cat->add_option("--metric", cat.metric, "factor metrics, e.g. linf,l2");
    sc_cat->add_option("--out", cat.out, "output JSON path")->required();
    auto* c_opt = sc_cat->add_option("--c", cat.c, "constant value for --name constant");

    EnvelopeArgs env;
    auto* sc_env = app.add_subcommand("envelope", "sup/inf envelope over factor balls");
    sc_env->add_option("--in", env.in, "input function JSON")->required();
    sc_env->add_option("--alpha", env.alpha, "ball radius")->required();
    sc_env->add_option("--bound", env.bound, "sup or inf")->required();
    sc_env->add_option("--var", env.var, "first or second")->required();
    sc_env->add_option("--kernel", env.kernel, "auto, naive or separable");
    sc_env->add_option("--out", env.out, "output JSON path")->required();

    SequenceArgs seq;
    auto* sc_seq = app.add_subcommand("sequence", "monotone lower/upper/inserted pipeline");
    sc_seq->add_option("--in", seq.in, "input function JSON")->required();
    sc_seq->add_option("--n", seq.n, "number of steps")->required();
    auto* rho_opt = sc_seq->add_option("--rho", seq.rho, "radius scale (default: half max extent)");
    sc_seq->add_option("--outdir", seq.outdir, "output directory")->required();

    InsertArgs ins;
    auto* sc_ins = app.add_subcommand("insert", "midpoint between a lower/upper pair");
    sc_ins->add_option("--lower", ins.lower, "lower function JSON")->required();
    sc_ins->add_option("--upper", ins.upper, "upper function JSON")->required();
    sc_ins->add_option("--out", ins.out, "output JSON path")->required();

    TruncateArgs tr;
    auto* sc_tr = app.add_subcommand("truncate", "clamp values to [-level, level]");
    sc_tr->add_option("--in", tr.in, "input function JSON")->required();
    sc_tr->add_option("--level", tr.level, "truncation level")->required();
    sc_tr->add_option("--out", tr.out, "output JSON path")->required();

    VerifyArgs ver;
    auto* sc_ver = app.add_subcommand("verify", "semicontinuity certification");
    sc_ver->add_option("--in", ver.in, "input function JSON")->required();
    sc_ver->add_option("--mode", ver.mode, "lsc-first, usc-second or joint-lsc-envelope")
        ->required();
    sc_ver->add_option("--alpha", ver.alpha, "leading radius of the shrinking schedule")
        ->required();
    sc_ver->add_option("--tol", ver.tol, "deficiency tolerance")->required();
    sc_ver->add_option("--out", ver.out, "verdict JSON path (profile CSV goes beside it)")
        ->required();

    ReportArgs rep;
    auto* sc_rep = app.add_subcommand("report", "convergence CSVs from a sequence directory");
    sc_rep->add_option("--manifest", rep.manifest, "sequence directory")->required();
    sc_rep->add_option("--tol", rep.tol, "gap tolerance")->required();
    sc_rep->add_option("--out", rep.out, "per-step CSV path (per-node CSV goes beside it)")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "envkit:error: " << e.what() << "\n";
        return 1;
    }

    try {
        cat.c_given = c_opt->count() > 0;
        cat.metric_given = metric_opt->count() > 0;
        seq.rho_given = rho_opt->count() > 0;
        if (sc_cat->parsed()) return run_catalog(cat);
        if (sc_env->parsed()) return run_envelope(env);
        if (sc_seq->parsed()) return run_sequence(seq);
        if (sc_ins->parsed()) return run_insert(ins);
        if (sc_tr->parsed()) return run_truncate(tr);
        if (sc_ver->parsed()) return run_verify(ver);
        if (sc_rep->parsed()) return run_report(rep);
    } catch (const envkit::Error& e) {
        std::cerr << "envkit:error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "envkit:error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
