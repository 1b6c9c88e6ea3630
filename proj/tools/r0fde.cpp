// r0fde: command-line front end.
//
//   r0fde r0 SPEC [--t0 T] [--grid N] [--method direct|bisect|both] [--force]
//   r0fde stability SPEC
//   r0fde simulate SPEC [--init const:V|FILE] [--T T] [--step H] [--out CSV] [--plot SVG]
//   r0fde verify SPEC [--suite NAME] [--seed S] [--count K]
//   r0fde tick-equilibrium SPEC
//   r0fde canonicalize SPEC
//
// Exit codes: 0 success, 1 verification failed, 2 invalid input or violated
// model assumption, 3 numerical failure.

#include "r0fde/io.hpp"
#include "r0fde/plot.hpp"
#include "r0fde/r0fde.hpp"
#include "r0fde/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

namespace {

using namespace r0fde;
using nlohmann::json;

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

LogLevel log_level()
{
    static const LogLevel level = [] {
        const char* env = std::getenv("R0FDE_LOG");
        const std::string v = env ? env : "warn";
        if (v == "error") return LogLevel::Error;
        if (v == "info") return LogLevel::Info;
        if (v == "debug") return LogLevel::Debug;
        return LogLevel::Warn;
    }();
    return level;
}

void log(LogLevel level, const std::string& msg)
{
    static const char* names[] = {"error", "warn", "info", "debug"};
    if (level <= log_level()) {
        std::cerr << "r0fde [" << names[static_cast<int>(level)] << "] " << msg << '\n';
    }
}

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

int exit_code_for(const Error& e)
{
    switch (e.code()) {
    case ErrorCode::Schema:
    case ErrorCode::InvalidArgument:
    case ErrorCode::AssumptionViolated:
    case ErrorCode::NotCooperative:
    case ErrorCode::NotMetzler:
    case ErrorCode::NotStable:
    case ErrorCode::DelayExceedsHistory:
        return kExitInput;
    default:
        return kExitNumeric;
    }
}

struct Common {
    std::string spec_path;
    double eps_order = 0.0;
};

io::ModelSpec load(const Common& c)
{
    log(LogLevel::Info, "loading " + c.spec_path);
    return io::load_model_spec(c.spec_path);
}

json suite_json(const verify::SuiteResult& r)
{
    json j;
    j["name"] = r.name;
    j["status"] = verify::to_string(r.status);
    j["checked"] = r.checked;
    j["failures"] = r.failures;
    j["metrics"] = r.metrics;
    j["notes"] = r.notes;
    return j;
}

// --- r0 ---------------------------------------------------------------------

struct R0Args {
    Common common;
    double t0 = 0.0;
    std::size_t grid = 128;
    std::string method = "both";
    double tol_mu = 1e-4;
    bool force = false;
};

int cmd_r0(const R0Args& a)
{
    const auto spec = load(a.common);
    NextGenModel model = spec.model();
    if (a.force) {
        model = assess(std::move(model), a.common.eps_order);
        if (!model.validated) {
            log(LogLevel::Error, "--force: model violates the next-generation assumptions; "
                                 "the numbers below carry no threshold meaning");
        }
    } else {
        model = validate(std::move(model), a.common.eps_order);
    }
    R0Options opts;
    opts.method = a.method == "direct" ? Method::Direct
                                       : (a.method == "bisect" ? Method::Bisect : Method::Both);
    opts.t0 = a.t0;
    opts.n = a.grid;
    opts.bisection.tol_mu = a.tol_mu;
    const auto rep = consistency_report(model, opts);
    json out = io::to_json(rep);
    if (spec.tick) {
        out["r0_closed_form"] = tick::r0_closed_form(*spec.tick);
    }
    std::cout << out.dump(2) << '\n';
    return kExitOk;
}

// --- stability --------------------------------------------------------------

int cmd_stability(const Common& c)
{
    const auto spec = load(c);
    const auto op = spec.model().combined();
    if (!op.check_cooperative(c.eps_order)) {
        throw Error(ErrorCode::NotCooperative, "F - V does not satisfy the cooperativity condition");
    }
    std::cout << io::to_json(sign_equivalence_report(op)).dump(2) << '\n';
    return kExitOk;
}

// --- simulate ---------------------------------------------------------------

struct SimulateArgs {
    Common common;
    std::string init = "const:1";
    double t_end = 10.0;
    double step = 0.0;
    std::size_t grid = 64;
    std::size_t stride = 1;
    std::string out_csv;
    std::string plot_svg;
};

HistorySegment initial_history(const SimulateArgs& a, std::size_t m, double tau)
{
    const std::string prefix = "const:";
    if (a.init.rfind(prefix, 0) == 0) {
        double v = 0.0;
        try {
            v = std::stod(a.init.substr(prefix.size()));
        } catch (const std::exception&) {
            throw Error(ErrorCode::Schema, "--init: cannot parse constant in '" + a.init + "'");
        }
        return HistorySegment::constant(Vector(m, v), tau, a.grid);
    }
    auto phi = io::parse_history(io::read_file(a.init), m);
    if (phi.tau() < tau) {
        throw Error(ErrorCode::DelayExceedsHistory, "--init history is shorter than the max delay");
    }
    return phi;
}

int cmd_simulate(const SimulateArgs& a)
{
    const auto spec = load(a.common);
    DdeTrajectory traj = [&] {
        if (spec.tick) {
            const auto phi = initial_history(a, tick::kStages, spec.tick->max_delay());
            return tick::simulate(*spec.tick, phi, a.t_end, a.step);
        }
        const auto op = spec.model().combined();
        const double tau = op.max_delay();
        const auto phi = initial_history(a, op.dim(), tau);
        double step = a.step;
        if (step <= 0.0) {
            step = tau > 0.0 ? tau / static_cast<double>(a.grid) : 0.01;
        }
        IntegratorConfig cfg;
        cfg.throw_on_blowup = false;
        return integrate(LinearDelayRhs(op), phi, a.t_end, step, cfg);
    }();
    if (traj.blew_up()) {
        log(LogLevel::Warn, "trajectory exceeded the overflow guard at t=" +
                                std::to_string(traj.end_time()) + "; output truncated");
    }
    if (!a.out_csv.empty()) {
        std::ofstream os(a.out_csv);
        if (!os) {
            throw Error(ErrorCode::InvalidArgument, "cannot write " + a.out_csv);
        }
        traj.write_csv(os, a.stride);
        log(LogLevel::Info, "wrote " + a.out_csv);
    }
    if (!a.plot_svg.empty()) {
        std::ofstream os(a.plot_svg);
        if (!os) {
            throw Error(ErrorCode::InvalidArgument, "cannot write " + a.plot_svg);
        }
        std::vector<std::string> labels;
        if (spec.tick) {
            labels = {"L", "N", "A_q", "A_f"};
        }
        plot::write_svg(os, traj, labels);
    }
    json out;
    out["t_end"] = traj.end_time();
    out["steps"] = traj.size() - 1;
    out["step"] = traj.step();
    out["blew_up"] = traj.blew_up();
    const auto last = traj.final_state();
    out["final_state"] = std::vector<double>(last.begin(), last.end());
    std::cout << out.dump(2) << '\n';
    return kExitOk;
}

// --- verify -----------------------------------------------------------------

struct VerifyArgs {
    Common common;
    std::string suite = "all";
    std::uint64_t seed = 0;
    std::size_t count = 50;
    std::size_t grid = 128;
};

int cmd_verify(const VerifyArgs& a)
{
    const auto spec = load(a.common);
    const NextGenModel model = validate(spec.model(), a.common.eps_order);
    const bool all = a.suite == "all";
    json suites = json::array();
    bool pass = true;
    auto record = [&](const verify::SuiteResult& r) {
        log(LogLevel::Info, r.name + ": " + verify::to_string(r.status));
        pass = pass && r.passed();
        suites.push_back(suite_json(r));
    };

    if (all || a.suite == "theorem2.1") {
        record(verify::sign_equivalence_model(model));
        auto batch = verify::sign_equivalence_batch(a.seed, a.count);
        batch.name += "/random";
        record(batch);
    }
    if (all || a.suite == "theorem2.2") {
        record(verify::r0_sign_model(model));
        auto batch = verify::r0_sign_batch(a.seed, a.count);
        batch.name += "/random";
        record(batch);
        record(verify::r0_bisection_suite(model, default_t0(model.combined()), a.grid));
    }
    if (all || a.suite == "lemma2.2") {
        record(verify::vhat_inverse_suite(model.V(), a.seed, 5));
    }
    if (all || a.suite == "spectral-map") {
        const auto op = model.combined();
        record(verify::spectral_mapping_suite(op, default_t0(op), a.grid));
    }
    if (all || a.suite == "threshold") {
        if (spec.tick) {
            tick::ThresholdOptions opts;
            record(verify::threshold_suite(*spec.tick, a.seed, 8, opts));
        } else {
            auto r = verify::suite("threshold", verify::Status::Skipped);
            r.notes.push_back("threshold harness needs a tick spec");
            record(r);
        }
    }
    json out;
    out["seed"] = a.seed;
    out["suite"] = a.suite;
    out["suites"] = suites;
    out["pass"] = pass;
    std::cout << out.dump(2) << '\n';
    return pass ? kExitOk : kExitVerifyFailed;
}

// --- tick-equilibrium -------------------------------------------------------

int cmd_tick_equilibrium(const Common& c)
{
    const auto spec = load(c);
    if (!spec.tick) {
        throw Error(ErrorCode::Schema, "tick-equilibrium needs a tick spec");
    }
    json out;
    out["r0"] = tick::r0_closed_form(*spec.tick);
    if (const auto u = tick::equilibrium(*spec.tick)) {
        out["equilibrium"] = io::to_json(*u);
        out["residual"] = tick::residual_norm(*spec.tick, *u);
    } else {
        out["equilibrium"] = nullptr;
    }
    std::cout << out.dump(2) << '\n';
    return kExitOk;
}

int cmd_canonicalize(const Common& c)
{
    std::cout << io::to_canonical_json(load(c));
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Basic reproduction number and stability analysis for linear delay systems"};
    app.require_subcommand(1);

    double eps_order = 0.0;
    app.add_option("--eps-order", eps_order,
                   "Tolerance for the nonnegativity / Metzler checks (default exact)")
        ->check(CLI::NonNegativeNumber);

    R0Args r0;
    auto* r0_cmd = app.add_subcommand("r0", "Compute R0 (direct, bisection or both)");
    r0_cmd->add_option("spec", r0.common.spec_path, "Model spec JSON")->required();
    r0_cmd->add_option("--t0", r0.t0, "Solution-map time (default max(tau, 1))");
    r0_cmd->add_option("--grid", r0.grid, "History grid count n")->check(CLI::Range(8, 1 << 20));
    r0_cmd->add_option("--method", r0.method)->check(CLI::IsMember({"direct", "bisect", "both"}));
    r0_cmd->add_option("--tol-mu", r0.tol_mu, "Relative bisection tolerance in mu");
    r0_cmd->add_flag("--force", r0.force, "Skip assumption validation (output is not meaningful)");

    Common stab;
    auto* stab_cmd = app.add_subcommand("stability", "s(L) against s(L-hat) for L = F - V");
    stab_cmd->add_option("spec", stab.spec_path)->required();

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Integrate the model and export the trajectory");
    sim_cmd->add_option("spec", sim.common.spec_path)->required();
    sim_cmd->add_option("--init", sim.init, "const:VALUE or a history JSON file");
    sim_cmd->add_option("--T", sim.t_end, "Final time")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--step", sim.step, "Step size (default tau / grid)");
    sim_cmd->add_option("--grid", sim.grid, "History grid count for const: histories");
    sim_cmd->add_option("--stride", sim.stride, "Write every k-th step to the CSV");
    sim_cmd->add_option("--out", sim.out_csv, "CSV output path");
    sim_cmd->add_option("--plot", sim.plot_svg, "SVG output path");

    VerifyArgs ver;
    auto* ver_cmd = app.add_subcommand("verify", "Run verification suites");
    ver_cmd->add_option("spec", ver.common.spec_path)->required();
    ver_cmd->add_option("--suite", ver.suite)
        ->check(CLI::IsMember(
            {"theorem2.1", "theorem2.2", "lemma2.2", "spectral-map", "threshold", "all"}));
    ver_cmd->add_option("--seed", ver.seed);
    ver_cmd->add_option("--count", ver.count, "Size of randomized batches");
    ver_cmd->add_option("--grid", ver.grid, "History grid count n");

    Common eq;
    auto* eq_cmd = app.add_subcommand("tick-equilibrium", "Positive equilibrium of a tick spec");
    eq_cmd->add_option("spec", eq.spec_path)->required();

    Common canon;
    auto* canon_cmd = app.add_subcommand("canonicalize", "Print the spec in canonical form");
    canon_cmd->add_option("spec", canon.spec_path)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitInput;
    }

    for (Common* c : {&r0.common, &stab, &sim.common, &ver.common, &eq, &canon}) {
        c->eps_order = eps_order;
    }

    try {
        if (r0_cmd->parsed()) return cmd_r0(r0);
        if (stab_cmd->parsed()) return cmd_stability(stab);
        if (sim_cmd->parsed()) return cmd_simulate(sim);
        if (ver_cmd->parsed()) return cmd_verify(ver);
        if (eq_cmd->parsed()) return cmd_tick_equilibrium(eq);
        if (canon_cmd->parsed()) return cmd_canonicalize(canon);
    } catch (const Error& e) {
        log(LogLevel::Error, e.what());
        return exit_code_for(e);
    } catch (const std::exception& e) {
        log(LogLevel::Error, e.what());
        return kExitNumeric;
    }
    return kExitOk;
}
