// Acceptance gate: ten end-to-end checks, one PASS/FAIL line each. The exit
// code is the number of failed criteria, so ctest turns any regression into
// a failing test. Run with --cli <path-to-envkit-binary> so criterion 10 can
// exercise the command-line pipeline.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "envkit/io.hpp"
#include "envkit/verify.hpp"
#include "oracle_utils.hpp"

namespace fs = std::filesystem;
using namespace envkit;
using namespace envkit::io;

namespace {

std::uint64_t bits(double x) { return std::bit_cast<std::uint64_t>(x); }

bool same_values(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (bits(a[i]) != bits(b[i])) return false;
    return true;
}

std::string node_str(const ProductGrid& g, std::size_t flat) { return node_label(g, flat); }

// ---- criteria 1 and 4: oracle equivalence and duality ----------------------

struct EnvelopeSuiteResult {
    std::string oracle_note;  // empty = criterion 1 holds
    std::string duality_note; // empty = criterion 4 holds
};

EnvelopeSuiteResult run_envelope_suite() {
    EnvelopeSuiteResult res;
    std::mt19937 rng(940221u);
    for (int it = 0; it < 200; ++it) {
        SampledFunction f = oracle::random_function(rng, 64);
        SampledFunction nf = negated(f);
        for (Variable var : {Variable::First, Variable::Second}) {
            double alpha = oracle::random_radius(rng, f.grid(), var);
            for (Bound b : {Bound::Sup, Bound::Inf}) {
                std::vector<double> want = oracle::ball_envelope(f, var, b, alpha);
                EnvelopeResult auto_r = ball_envelope(f, var, b, alpha);
                EnvelopeResult naive_r = ball_envelope(f, var, b, alpha, KernelChoice::Naive);
                if (res.oracle_note.empty() && !same_values(auto_r.output.values(), want))
                    res.oracle_note = "auto kernel diverged from the ball-scan oracle at "
                                      "instance " + std::to_string(it);
                if (res.oracle_note.empty() && !same_values(naive_r.output.values(), want))
                    res.oracle_note = "naive kernel diverged from the ball-scan oracle at "
                                      "instance " + std::to_string(it);
            }
            // inf(f) must equal -sup(-f) bit for bit
            EnvelopeResult inf_r = ball_envelope(f, var, Bound::Inf, alpha);
            EnvelopeResult dual = ball_envelope(nf, var, Bound::Sup, alpha);
            auto iv = inf_r.output.values();
            auto dv = dual.output.values();
            for (std::size_t i = 0; res.duality_note.empty() && i < iv.size(); ++i)
                if (bits(iv[i]) != bits(-dv[i]))
                    res.duality_note = "inf != -sup(-f) at instance " + std::to_string(it) +
                                       " node " + node_str(f.grid(), i);
        }
    }
    return res;
}

// ---- criterion 2: sliding extremum vs quadratic window scan ----------------

std::string run_sliding_suite() {
    std::mt19937 rng(552200u);
    for (int it = 0; it < 100000; ++it) {
        // mostly short sequences; every 100th stretches toward the 512 cap
        std::size_t n = (it % 100 == 0) ? 256 + oracle::below(rng, 257)
                                        : 2 + oracle::below(rng, 31);
        double a = oracle::uniform(rng, -3.0, 3.0);
        double len = oracle::uniform(rng, 0.5, 4.0);
        if (oracle::chance(rng, 0.5)) {
            a = std::round(a * 8.0) / 8.0;
            len = std::max(0.5, std::round(len * 8.0) / 8.0);
        }
        AxisGrid axis = linspace_axis(a, a + len, n);
        std::vector<double> v = oracle::random_values(rng, n);
        double r;
        if (oracle::chance(rng, 0.3)) {
            // exact node distance, to land on the open-window boundary
            std::size_t i = oracle::below(rng, n), j = oracle::below(rng, n);
            r = i == j ? axis.coords()[1] - axis.coords()[0]
                       : std::abs(axis.coords()[j] - axis.coords()[i]);
            if (!(r > 0.0)) r = len;
        } else {
            r = oracle::uniform(rng, 0.05, 1.5 * len);
        }
        for (Bound b : {Bound::Sup, Bound::Inf}) {
            std::vector<double> got = sliding_extremum_axis(v, axis, r, b);
            std::vector<double> want = oracle::sliding(v, axis.coords(), r, b);
            if (!same_values(got, want))
                return "deque scan diverged from the quadratic scan at instance " +
                       std::to_string(it) + " (n=" + std::to_string(n) + ")";
        }
    }
    return {};
}

// ---- criterion 3: sandwich + monotone columns on the whole catalog ---------

struct CatalogRuns {
    std::vector<EnvelopeSequence> seqs;
    std::string note; // empty = criterion 3 holds
};

CatalogRuns run_catalog_sequences() {
    CatalogRuns out;
    ProductGrid grid({linspace_axis(-1.0, 1.0, 65)}, {linspace_axis(-1.0, 1.0, 65)});
    for (const std::string& name : catalog_names()) {
        SampledFunction f = from_catalog(name, grid, {});
        EnvelopeSequence seq = envelope_sequence(f, 16, 1.0);
        auto fv = f.values();
        for (std::size_t s = 0; s < seq.steps.size(); ++s) {
            auto lv = seq.steps[s].lower.values();
            auto uv = seq.steps[s].upper.values();
            for (std::size_t i = 0; i < fv.size(); ++i) {
                if (!(lv[i] <= fv[i] && fv[i] <= uv[i])) {
                    out.note = name + ": sandwich violated at n=" +
                               std::to_string(seq.steps[s].n) + " node " +
                               node_str(grid, i);
                    return out;
                }
                if (s > 0) {
                    auto pl = seq.steps[s - 1].lower.values();
                    auto pu = seq.steps[s - 1].upper.values();
                    if (!(pl[i] <= lv[i] && uv[i] <= pu[i])) {
                        out.note = name + ": column not monotone at n=" +
                                   std::to_string(seq.steps[s].n) + " node " +
                                   node_str(grid, i);
                        return out;
                    }
                }
            }
        }
        out.seqs.push_back(std::move(seq));
    }
    return out;
}

// ---- criterion 5: Lipschitz decay rate of the upper envelope ---------------

std::string check_lipschitz_rate(const CatalogRuns& runs) {
    for (const EnvelopeSequence& seq : runs.seqs) {
        if (seq.base.name() != "lipschitz_sine") continue;
        auto fv = seq.base.values();
        for (const EnvelopeStep& step : seq.steps) {
            auto uv = step.upper.values();
            double bound = 1.0 * 1.0 / static_cast<double>(step.n) + 1e-12;
            for (std::size_t i = 0; i < fv.size(); ++i)
                if (!(uv[i] - fv[i] <= bound))
                    return "upper envelope exceeded the Lipschitz rate at n=" +
                           std::to_string(step.n) + " node " + node_str(seq.base.grid(), i);
        }
        return {};
    }
    return "lipschitz_sine run missing";
}

// ---- criterion 6: pointwise gap collapse for the two-sided step ------------

// Axis straddling 0 without containing it. The nearest non-positive node hugs
// the jump (at -1e-9) so that "radius clears the nearest opposite-side node"
// and "radius clears the jump line" classify every scheduled radius
// identically; the positive block is offset so no radius 1/n ties a node.
AxisGrid jump_avoiding_axis() {
    AxisGrid neg = linspace_axis(-1.0, -1e-9, 16);
    AxisGrid pos = linspace_axis(0.0137, 1.0137, 48);
    std::vector<double> c;
    c.insert(c.end(), neg.coords().begin(), neg.coords().end());
    c.insert(c.end(), pos.coords().begin(), pos.coords().end());
    return AxisGrid(std::move(c));
}

std::string run_step_convergence() {
    AxisGrid axis = jump_avoiding_axis();
    ProductGrid grid({axis}, {axis});
    SampledFunction f = from_catalog("mixed_step", grid, {});
    const auto& c = axis.coords();
    const std::size_t m = c.size();

    EnvelopeSequence seq = envelope_sequence(f, 100, 1.0);

    // design precondition: every radius stays a safe margin away from the
    // band [node, node + 1e-9] of each positive node
    for (const EnvelopeStep& step : seq.steps)
        for (double x : c)
            if (x > 0.0 && !(step.alpha < x - 1e-7 || step.alpha > x + 1e-9 + 1e-7))
                return "schedule radius " + format_double(step.alpha) +
                       " too close to node " + format_double(x);

    auto fv = f.values();
    std::vector<char> ap(m);
    for (const EnvelopeStep& step : seq.steps) {
        const double alpha = step.alpha;
        // all_pos[t]: every node within the open window of c[t] is positive
        for (std::size_t t = 0; t < m; ++t) {
            ap[t] = 1;
            for (std::size_t j = 0; j < m; ++j)
                if (std::abs(c[j] - c[t]) < alpha && !(c[j] > 0.0)) {
                    ap[t] = 0;
                    break;
                }
        }
        auto lv = step.lower.values();
        auto uv = step.upper.values();
        for (std::size_t ix = 0; ix < m; ++ix)
            for (std::size_t iy = 0; iy < m; ++iy) {
                std::size_t i = ix * m + iy;
                double eu = (c[ix] > 0.0 ? 1.0 : 0.0) - (ap[iy] ? 1.0 : 0.0);
                double el = (ap[ix] ? 1.0 : 0.0) - (c[iy] > 0.0 ? 1.0 : 0.0);
                if (bits(uv[i]) != bits(eu) || bits(lv[i]) != bits(el))
                    return "envelope mismatch vs closed form at n=" +
                           std::to_string(step.n) + " node " + node_str(grid, i);
                bool gap_zero = (uv[i] - lv[i]) == 0.0;
                bool cleared = (c[ix] <= 0.0 || alpha < c[ix]) &&
                               (c[iy] <= 0.0 || alpha < c[iy]);
                if (gap_zero != cleared)
                    return "gap/jump-distance mismatch at n=" + std::to_string(step.n) +
                           " node " + node_str(grid, i);
            }
    }
    // every node's gap must actually reach 0 within the schedule
    auto lv = seq.steps.back().lower.values();
    auto uv = seq.steps.back().upper.values();
    for (std::size_t i = 0; i < fv.size(); ++i)
        if (uv[i] - lv[i] != 0.0)
            return "gap never collapsed at node " + node_str(grid, i);
    return {};
}

// ---- criterion 7: continuous insertion -------------------------------------

std::string check_insertion(const CatalogRuns& runs) {
    for (const EnvelopeSequence& seq : runs.seqs) {
        for (const EnvelopeStep& step : seq.steps) {
            auto lv = step.lower.values();
            auto uv = step.upper.values();
            auto mv = step.inserted.values();
            for (std::size_t i = 0; i < mv.size(); ++i)
                if (!(lv[i] <= mv[i] && mv[i] <= uv[i]))
                    return seq.base.name() + ": inserted function left the sandwich at n=" +
                           std::to_string(step.n);
            double slope = nodal_lipschitz(step.inserted);
            if (!std::isfinite(slope))
                return seq.base.name() + ": insertion slope estimate not finite";
            if (seq.base.name() == "lipschitz_sine" && !(slope <= 2.0))
                return "sine insertion slope " + format_double(slope) + " above 2";
        }
    }
    return {};
}

// ---- criterion 8: truncation commutes and stabilizes ------------------------

std::string run_truncation_checks() {
    std::mt19937 rng(181101u);
    for (int it = 0; it < 100; ++it) {
        SampledFunction f = oracle::random_function(rng, 32);
        double level = oracle::uniform(rng, 0.05, 3.0);
        SampledFunction tf = truncate(f, level);
        for (Variable var : {Variable::First, Variable::Second}) {
            double alpha = oracle::random_radius(rng, f.grid(), var);
            for (Bound b : {Bound::Sup, Bound::Inf}) {
                SampledFunction env_then_clamp =
                    truncate(ball_envelope(f, var, b, alpha).output, level);
                SampledFunction clamp_then_env = ball_envelope(tf, var, b, alpha).output;
                if (!same_values(env_then_clamp.values(), clamp_then_env.values()))
                    return "clamp did not commute with the envelope at instance " +
                           std::to_string(it);
            }
        }
    }

    ProductGrid grid({linspace_axis(-1.0, 1.0, 65)}, {linspace_axis(-1.0, 1.0, 65)});
    SampledFunction f = from_catalog("unbounded_hyperbola", grid, {});
    double peak = 0.0;
    for (double v : f.values()) peak = std::max(peak, std::abs(v));
    if (peak != 10.0) return "expected a grid peak of exactly 10";

    std::vector<EnvelopeSequence> stages = truncated_sequence(f, 12, 1.0);
    auto stage_equal = [&](const EnvelopeSequence& a, const EnvelopeSequence& b) {
        if (!same_values(a.base.values(), b.base.values())) return false;
        for (std::size_t s = 0; s < a.steps.size(); ++s)
            if (!same_values(a.steps[s].lower.values(), b.steps[s].lower.values()) ||
                !same_values(a.steps[s].upper.values(), b.steps[s].upper.values()) ||
                !same_values(a.steps[s].inserted.values(), b.steps[s].inserted.values()))
                return false;
        return true;
    };
    // levels at or above the peak change nothing; the level just below does
    if (!stage_equal(stages[9], stages[10]) || !stage_equal(stages[10], stages[11]))
        return "stages at levels >= the peak failed to stabilize";
    if (stage_equal(stages[8], stages[9])) return "level below the peak had no effect";
    if (!same_values(stages[9].base.values(), f.values()))
        return "stage at the peak level altered the function";
    return {};
}

// ---- criterion 9: verifier discrimination ------------------------------------

std::string run_verifier_checks() {
    ProductGrid grid({linspace_axis(-1.0, 1.0, 65)}, {linspace_axis(-1.0, 1.0, 65)});
    SampledFunction f = from_catalog("mixed_step", grid, {});
    auto radii = default_radius_schedule(grid);

    CheckResult good1 = check_separate_lsc_first(f, radii, 1e-9);
    if (!good1.profile.analytic || !good1.verdict.passed || good1.verdict.trend != 0.0)
        return "lsc-in-first check failed on the mixed step";
    CheckResult good2 = check_separate_usc_second(f, radii, 1e-9);
    if (!good2.verdict.passed || good2.verdict.trend != 0.0)
        return "usc-in-second check failed on the mixed step";

    CheckResult bad1 = check_semicontinuity(f, DeficiencyMode::SeparateFirst,
                                            SemicontinuitySide::Upper, radii, 1e-9);
    if (bad1.verdict.passed || bad1.verdict.trend != 1.0 || !bad1.verdict.witness ||
        bad1.verdict.witness->deficiency != 1.0 ||
        bad1.verdict.witness->node != std::vector<std::size_t>{32, 0})
        return "usc-in-first check did not pin the x jump with height 1";
    CheckResult bad2 = check_semicontinuity(f, DeficiencyMode::SeparateSecond,
                                            SemicontinuitySide::Lower, radii, 1e-9);
    if (bad2.verdict.passed || bad2.verdict.trend != 1.0 || !bad2.verdict.witness ||
        bad2.verdict.witness->deficiency != 1.0 ||
        bad2.verdict.witness->node != std::vector<std::size_t>{0, 32})
        return "lsc-in-second check did not pin the y jump with height 1";

    std::vector<double> joint_radii{0.25, 0.125, 0.0625, 0.03125, 0.01};
    CheckResult joint = verify_envelope_joint_lsc(f, 0.25, joint_radii, 1e-9);
    if (!joint.verdict.passed || joint.verdict.trend != 0.0)
        return "sup envelope of the mixed step failed the joint lsc check";
    return {};
}

// ---- criterion 10: CLI determinism and exit codes ----------------------------

int cli_run(const std::string& cli, const std::string& args, const fs::path& err_file) {
    std::string cmd = "'" + cli + "' " + args + " >/dev/null 2>'" + err_file.string() + "'";
    int st = std::system(cmd.c_str());
    if (st == -1) return -1;
    return WIFEXITED(st) ? WEXITSTATUS(st) : -2;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string run_cli_checks(const std::string& cli) {
    if (cli.empty()) return "no --cli <path> argument given";
    fs::path root =
        fs::temp_directory_path() / ("envkit_acceptance_" + std::to_string(::getpid()));
    std::error_code ec;
    fs::remove_all(root, ec);
    fs::create_directories(root);
    fs::path errf = root / "stderr.txt";

    auto q = [](const fs::path& p) { return "'" + p.string() + "'"; };
    std::string grid33 = "'x=lin(-1,1,33);y=lin(-1,1,33)'";

    auto pipeline = [&](const fs::path& dir) -> std::string {
        fs::create_directories(dir);
        struct Cmd {
            const char* what;
            std::string args;
        };
        fs::path fjson = dir / "f.json";
        std::vector<Cmd> cmds{
            {"catalog", "catalog --name mixed_step --grid " + grid33 +
                            " --metric linf,linf --out " + q(fjson)},
            {"envelope", "envelope --in " + q(fjson) +
                             " --alpha 0.25 --bound sup --var second --out " +
                             q(dir / "env.json")},
            {"sequence",
             "sequence --in " + q(fjson) + " --n 6 --rho 1 --outdir " + q(dir / "seq")},
            {"insert", "insert --lower " + q(dir / "seq" / "step_003_lower.json") +
                           " --upper " + q(dir / "seq" / "step_003_upper.json") + " --out " +
                           q(dir / "mid.json")},
            {"truncate",
             "truncate --in " + q(fjson) + " --level 0.5 --out " + q(dir / "trunc.json")},
            {"report", "report --manifest " + q(dir / "seq") + " --tol 0.125 --out " +
                           q(dir / "report.csv")},
            {"verify", "verify --in " + q(fjson) +
                           " --mode lsc-first --alpha 0.5 --tol 1e-9 --out " +
                           q(dir / "verdict.json")},
        };
        for (const Cmd& c : cmds) {
            int rc = cli_run(cli, c.args, errf);
            if (rc != 0)
                return std::string(c.what) + " exited with " + std::to_string(rc) + ": " +
                       read_file(errf);
        }
        return {};
    };

    std::string err = pipeline(root / "a");
    if (!err.empty()) return err;
    err = pipeline(root / "b");
    if (!err.empty()) return err;

    // byte-for-byte reproducibility of the whole output tree
    auto tree = [](const fs::path& dir) {
        std::vector<std::pair<std::string, std::string>> files;
        for (const auto& e : fs::recursive_directory_iterator(dir))
            if (e.is_regular_file())
                files.emplace_back(fs::relative(e.path(), dir).string(),
                                   read_file(e.path()));
        std::sort(files.begin(), files.end());
        return files;
    };
    auto ta = tree(root / "a");
    auto tb = tree(root / "b");
    if (ta.size() < 25) return "pipeline produced too few files";
    if (ta != tb) return "repeated runs were not byte-identical";

    // verdict content of the passing verify
    json verdict = parse_file(root / "a" / "verdict.json");
    if (verdict.at("passed") != true || verdict.at("engine") != "analytic")
        return "verify verdict did not pass on the analytic engine";

    // constant catalog entry: the envelope must be a fixed point
    if (cli_run(cli,
                "catalog --name constant --c 3 --grid 'x=lin(0,1,9);y=lin(0,1,9)' "
                "--metric linf,linf --out " +
                    q(root / "c.json"),
                errf) != 0)
        return "constant catalog write failed";
    if (cli_run(cli,
                "envelope --in " + q(root / "c.json") +
                    " --alpha 0.3 --bound sup --var second --out " + q(root / "cenv.json"),
                errf) != 0)
        return "constant envelope failed";
    SampledFunction c0 = load_function(root / "c.json");
    SampledFunction c1 = load_function(root / "cenv.json");
    if (!same_values(c0.values(), c1.values()) || c0.values()[0] != 3.0)
        return "constant function was not a fixed point of its envelope";

    // validation failures exit with 1 and the error prefix
    struct BadCase {
        const char* what;
        std::string args;
    };
    std::ofstream(root / "broken.json") << "{broken";
    std::vector<BadCase> bad{
        {"unknown flag", "envelope --in " + q(root / "c.json") + " --alpha 0.25 --bound sup "
                             "--var second --bogus 1 --out " +
                             q(root / "t1.json")},
        {"unknown catalog name",
         "catalog --name not_a_function --grid 'x=lin(0,1,5);y=lin(0,1,5)' --metric "
         "linf,linf --out " +
             q(root / "t2.json")},
        {"malformed input", "verify --in " + q(root / "broken.json") +
                                " --mode lsc-first --alpha 0.5 --tol 1e-9 --out " +
                                q(root / "t3.json")},
    };
    for (const BadCase& b : bad) {
        int rc = cli_run(cli, b.args, errf);
        if (rc != 1)
            return std::string(b.what) + " should exit 1, got " + std::to_string(rc);
        if (read_file(errf).find("envkit:error:") == std::string::npos)
            return std::string(b.what) + " did not print the error prefix";
    }

    // a genuine semicontinuity failure exits with 2 and names a witness
    SampledFunction tampered = negated(load_function(root / "a" / "f.json"));
    save_function(tampered.with_name("tampered"), root / "tampered.json");
    int rc = cli_run(cli,
                     "verify --in " + q(root / "tampered.json") +
                         " --mode lsc-first --alpha 0.5 --tol 1e-9 --out " +
                         q(root / "vbad.json"),
                     errf);
    if (rc != 2) return "tampered verify should exit 2, got " + std::to_string(rc);
    json vbad = parse_file(root / "vbad.json");
    if (vbad.at("passed") != false || vbad.at("engine") != "sampled" ||
        !vbad.at("witness").is_object())
        return "failing verdict did not carry a sampled-engine witness";

    fs::remove_all(root, ec);
    return {};
}

} // namespace

int main(int argc, char** argv) {
    std::string cli;
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--cli") cli = argv[i + 1];

    struct Row {
        const char* name;
        std::string note;
    };
    std::vector<Row> rows;

    EnvelopeSuiteResult suite = run_envelope_suite();
    rows.push_back({"envelope operators match the exhaustive ball scan", suite.oracle_note});
    rows.push_back({"sliding extremum matches the quadratic window scan", run_sliding_suite()});
    CatalogRuns runs = run_catalog_sequences();
    rows.push_back({"sandwich and monotone columns hold on the whole catalog", runs.note});
    rows.push_back({"inf envelope is the negated sup of the negation", suite.duality_note});
    rows.push_back({"upper envelope of the sine decays at the Lipschitz rate",
                    check_lipschitz_rate(runs)});
    rows.push_back({"step gaps collapse exactly when the radius clears the jump",
                    run_step_convergence()});
    rows.push_back({"insertion stays inside the sandwich with a tame slope",
                    check_insertion(runs)});
    rows.push_back({"truncation commutes with envelopes and stabilizes", run_truncation_checks()});
    rows.push_back({"verifier discriminates jump orientation with witnesses",
                    run_verifier_checks()});
    rows.push_back({"CLI pipeline is byte-reproducible with typed exit codes",
                    run_cli_checks(cli)});

    int failures = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        bool ok = rows[i].note.empty();
        failures += ok ? 0 : 1;
        std::printf("criterion %2zu %s  %s\n", i + 1, ok ? "PASS" : "FAIL", rows[i].name);
        if (!ok) std::printf("             -> %s\n", rows[i].note.c_str());
    }
    std::printf("%d/10 criteria passed\n", 10 - failures);
    return failures;
}
