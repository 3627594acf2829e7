#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "conewidth/errors.hpp"
#include "conewidth/experiment.hpp"
#include "conewidth/format.hpp"
#include "conewidth/maximal.hpp"
#include "conewidth/roughing.hpp"
#include "conewidth/width.hpp"

namespace fs = std::filesystem;
using namespace cw;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitAssert = 2;
constexpr int kExitResource = 3;

struct AssertionFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& invariant) {
    if (!ok) throw AssertionFailure(invariant);
}

// Options of one subcommand, collected as strings so that only the flags
// actually given on the command line override the config file.
struct Options {
    CLI::App* app = nullptr;
    std::map<std::string, std::string> values;
    std::vector<std::string> keys;

    void add(const std::string& key, const std::string& help) {
        keys.push_back(key);
        app->add_option("--" + key, values[key], help);
    }
    Config given() const {
        Config c;
        for (const auto& k : keys)
            if (app->count("--" + k) > 0) c.set(k, values.at(k));
        return c;
    }
};

struct Run {
    std::string command;
    Config cfg;
    std::string out_dir;
    unsigned long long seed = 0;
    Manifest* manifest = nullptr;

    std::string path(const std::string& file) const { return (fs::path(out_dir) / file).string(); }
    void emit(const std::string& file, const std::string& text) const {
        write_text_file(path(file), text);
        manifest->output(out_dir, file);
    }
};

double sigma_of(const Config& c, double def) {
    double s = c.num("sigma", def);
    if (!(s > 0.0 && s < 1.0)) throw ArgumentError("config key sigma: must lie in (0,1)");
    return s;
}

int resolution_of(const Config& c, int def) {
    int N = c.integer("N", def);
    if (N != 0 && (N < 1 || (N & (N - 1)) != 0)) throw ArgumentError("config key N: must be a power of 2");
    return N;
}

GridSet load_set(const Config& c) {
    if (!c.has("set")) throw ArgumentError("config key set: required");
    std::string p = c.str("set", "");
    if (fs::path(p).extension() == ".json") {
        std::ifstream in(p);
        if (!in) throw ArgumentError("config key set: cannot open " + p);
        return grid_set_from_json(nlohmann::json::parse(in));
    }
    return load_grid_set(p);
}

PiecewiseCongruentMap load_map(const std::string& spec) {
    if (fs::path(spec).extension() == ".json") {
        std::ifstream in(spec);
        if (!in) throw ArgumentError("cannot open map file " + spec);
        return PiecewiseCongruentMap::from_json(nlohmann::json::parse(in));
    }
    return pcm_catalog(spec);
}

Direction axis_of(const Config& c, int dim) {
    Vec def = Vec::Unit(dim, 0);
    Vec a = c.vec("axis", def);
    if (a.size() != dim) throw ArgumentError("config key axis: expected " + std::to_string(dim) + " components");
    return Direction(a);
}

std::vector<double> schedule_of(const Config& c, int N) {
    return default_schedule(N, c.num("delta0", 0.125), c.num("floor", 2.0));
}

void check_non_increasing(const WidthReport& r) {
    for (std::size_t k = 1; k < r.sup_values.size(); ++k)
        require(r.sup_values[k] <= r.sup_values[k - 1], "width sup values non-increasing along the schedule");
}

void cmd_cantor(Run& run) {
    const auto& c = run.cfg;
    int depth = c.integer("depth", 2);
    int k0 = c.integer("k0", 0);
    int N = resolution_of(c, 0);
    if (depth < 0) throw ArgumentError("config key depth: must be non-negative");
    GridSet s = cached_cantor(depth, k0, N);
    std::string out = c.str("out", "cantor.set");
    std::ostringstream os;
    if (fs::path(out).extension() == ".json")
        os << grid_set_to_json(s).dump() << '\n';
    else
        write_grid_set(os, s);
    run.emit(out, os.str());
    Index side = 0;
    for (Index i = 0; i < s.size(); ++i)
        if (s.test(i)) {
            Coord a = s.coords(i);
            while (s.test(Coord{a[0] + int(side), a[1], 0})) ++side;
            break;
        }
    Index boxes = Index(1) << (2 * depth);
    require(s.count() == boxes * side * side, "four-corner set has 4^depth square boxes");
    std::printf("cantor depth %d: %lld cells on N = %d\n", depth, static_cast<long long>(s.count()), s.N());
}

void cmd_width(Run& run) {
    const auto& c = run.cfg;
    GridSet s = load_set(c);
    Cone cone(axis_of(c, s.dim()), sigma_of(c, 0.1));
    auto rep = estimate_width(s, cone, schedule_of(c, s.N()), c.integer("radius", 4), true);
    run.emit(c.str("out", "width.csv"), rep.to_csv());
    run.emit(c.str("json", "width.json"), rep.to_json().dump(2) + "\n");
    check_non_increasing(rep);
    std::printf("width %s\n", fmt_double(rep.width).c_str());
}

void cmd_width_fn(Run& run) {
    const auto& c = run.cfg;
    GridSet s = load_set(c);
    const double sigma = sigma_of(c, 0.1);
    auto w = width_function(s, Cone(axis_of(c, s.dim()), sigma), c.integer("radius", 4));
    std::ostringstream os;
    write_field_csv(os, w);
    run.emit(c.str("out", "width_fn.csv"), os.str());
    const double h = s.h(), b = beta(sigma);
    for (Index i = 0; i < s.size(); ++i) {
        require(w.at(i) >= 0.0, "width function is non-negative");
        Coord a = s.coords(i);
        for (int d = 0; d < s.dim(); ++d) {
            Coord n = a;
            ++n[d];
            if (!s.in_range(n)) continue;
            require(std::abs(w.at(s.index(n)) - w.at(i)) <= (1.0 + b) * h + 2.0 * h,
                    "width function is (1+beta)-Lipschitz up to 2h");
        }
    }
    std::printf("width function max %s\n", fmt_double(w.max_abs()).c_str());
}

void cmd_sweep(Run& run) {
    const auto& c = run.cfg;
    GridSet s = load_set(c);
    int K = c.integer("directions", 16);
    int workers = c.integer("workers", 1);
    if (workers < 1) throw ArgumentError("config key workers: must be at least 1");
    auto rows = uniform_sweep(s, sweep_directions(s.dim(), K), sigma_of(c, 0.1), schedule_of(c, s.N()),
                              c.integer("radius", 4), workers);
    run.emit(c.str("out", "sweep.csv"), sweep_csv(rows));
    double mx = 0.0;
    for (const auto& r : rows) {
        check_non_increasing(r.report);
        mx = std::max(mx, r.report.width);
    }
    std::printf("max width %s over %d directions\n", fmt_double(mx).c_str(), K);
}

void cmd_xi(Run& run) {
    const auto& c = run.cfg;
    auto f = load_map(c.str("map", "tent"));
    double eps = c.num("eps", 0.08);
    if (!(eps > 0.0 && eps < 0.1)) throw ArgumentError("config key eps: must lie in (0, 1/10)");
    int N = resolution_of(c, f.dim() == 1 ? 1024 : 256);
    Direction e = axis_of(c, f.dim());
    auto xi = xi_set(f, e, eps, N, c.integer("octaves", 6));
    Cone cone(e, eps * eps / 4.0);
    GridSet raster = null_face_raster(f.partition(), cone, N, (1.0 + 1e-9) / N);
    std::ostringstream os;
    write_grid_set(os, xi.marked);
    run.emit(c.str("out", "xi.set"), os.str());
    std::ostringstream cs;
    cs << "map,n,N,eps,sigma,xi_cells,raster_cells,xi_in_raster\n";
    bool inside = xi.marked.subset_of(raster);
    cs << csv_join({f.name(), std::to_string(f.dim()), std::to_string(N), fmt_double(eps),
                    fmt_double(cone.sigma()), std::to_string(xi.marked.count()), std::to_string(raster.count()),
                    inside ? "1" : "0"})
       << '\n';
    run.emit(c.str("csv", "xi.csv"), cs.str());
    require(inside, "Xi lies in the null-face raster");
    std::printf("xi: %lld marked nodes\n", static_cast<long long>(xi.marked.count()));
}

void cmd_divergence(Run& run) {
    const auto& c = run.cfg;
    auto f = load_map(c.str("f", "fold_cross"));
    const int n = f.dim();
    if (n != 2 && c.has("perturb")) throw ArgumentError("config key perturb: planar maps only");
    PiecewiseCongruentMap g = f;
    if (c.has("g")) {
        g = load_map(c.str("g", ""));
    } else {
        double a = c.num("perturb", 0.0);
        Mat Q(2, 2);
        Q << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
        if (n == 2) g = pcm_postcompose(f, Q, Vec::Zero(2));
    }
    const double eps = c.num("eps", 0.01), omega = c.num("omega", 0.01);
    const int k0 = c.integer("k0", 9);
    const int N = resolution_of(c, 128);
    Direction e = axis_of(c, n);
    auto dv = divergence_set(f, g, e, eps, k0, N);
    GridSet inner = restrict_to_inset(dv.marked, 4.0 / k0);
    const double budget = divergence_diameter_budget(n, std::max(f.cell_count(), g.cell_count()), eps, omega);
    const double sigma =
        c.has("sigma") ? sigma_of(c, 0.1) : std::ldexp(1.0, -11) * std::pow(eps, 4) / double(f.cell_count());
    double w = estimate_width(inner, Cone(e, sigma), schedule_of(c, N), c.integer("radius", 4), false).width;
    const double sd = pcm_sup_distance(f, g);
    const double bound = (1.0 + std::sqrt(double(n))) * omega + grid_tolerance(1.0 / N, sigma);
    std::ostringstream os;
    write_grid_set(os, dv.marked);
    run.emit(c.str("out", "divergence.set"), os.str());
    std::ostringstream cs;
    cs << "f,g,budget,sup_distance,cells,inset_cells,sigma,width,bound,within_budget\n";
    cs << csv_join({f.name(), g.name(), fmt_double(budget), fmt_double(sd), std::to_string(dv.marked.count()),
                    std::to_string(inner.count()), fmt_double(sigma), fmt_double(w), fmt_double(bound),
                    sd <= budget ? "1" : "0"})
       << '\n';
    run.emit(c.str("csv", "divergence.csv"), cs.str());
    if (sd <= budget) require(w < bound, "divergence set width below (1+sqrt n) omega + grid tolerance");
    std::printf("divergence: %lld nodes, inset width %s\n", static_cast<long long>(dv.marked.count()),
                fmt_double(w).c_str());
}

void cmd_rough(Run& run) {
    const auto& c = run.cfg;
    GridSet E = load_set(c);
    const int n = E.dim();
    RoughingParams p;
    p.eta = c.num("eta", p.eta);
    p.eps = c.num("eps", p.eps);
    p.sigma = sigma_of(c, p.sigma);
    p.lambda = c.num("lambda", p.lambda);
    p.radius = c.integer("radius", p.radius);
    p.delta0 = c.num("delta0", p.delta0);
    p.relax = c.num("relaxed", p.relax);
    p.delta_floor_cells = c.num("delta_floor", p.delta_floor_cells);
    p.theta_floor_cells = c.num("theta_floor", p.theta_floor_cells);
    p.v = Direction(c.vec("v", Vec::Unit(n, 0)));
    p.u = c.vec("u", Vec::Unit(n, 0));
    if (p.v.dim() != n || p.u.size() != n) throw ArgumentError("config keys u, v: dimension mismatch");
    auto f = smooth_catalog(c.str("f", "zero"), n, n, run.seed);
    auto F = rough(f, E, p);
    auto gb = check_G_bounds(F, E, 16);
    auto sn = check_sup_norm(F, E.N());
    auto gr = check_gradient(F, static_cast<std::size_t>(c.integer("samples", 10000)), run.seed + 7);
    auto qr = verify_quotients(F, E, 5);
    const auto& cal = F.calibration();
    nlohmann::json j;
    j["function"] = f.name();
    j["params"] = {{"eta", p.eta},       {"eps", p.eps},
                   {"sigma", p.sigma},   {"lambda", p.lambda},
                   {"radius", p.radius}, {"relax", p.relax},
                   {"v", vec_to_json(p.v.vec())}, {"u", vec_to_json(p.u)}};
    j["calibration"] = {{"delta_i", cal.delta_i},       {"delta_E", cal.delta_E},
                        {"theta", cal.theta},           {"h_star", cal.h_star},
                        {"width_theta", cal.width_theta}, {"outside_theorem", cal.outside_theorem},
                        {"budget_sum", cal.budget.sum}, {"budget_bound", cal.budget.bound},
                        {"notes", cal.notes}};
    j["checks"] = {{"G_sup", gb.sup_norm},
                   {"G_sup_bound", gb.sup_bound},
                   {"G_quotient_failures", gb.failures},
                   {"sup_distance", sn.max_distance},
                   {"sup_bound", sn.bound},
                   {"gradient_failures", gr.failures},
                   {"gradient_samples", gr.samples},
                   {"gradient_worst", gr.worst},
                   {"quotient_fraction", qr.fraction()},
                   {"quotient_bound", qr.bound}};
    run.emit(c.str("out", "rough.json"), j.dump(2) + "\n");
    run.emit(c.str("trace", "quotient_trace.csv"), qr.trace_csv());
    require(gb.ok(), "G sup-norm and quotient bounds");
    require(sn.ok(), "sup-norm distance bound");
    require(qr.fraction() >= 0.99, "quotient bound at 99% of E-nodes");
    require(gr.failures == 0, "gradient norm below 1 - eta^2");
    std::printf("rough: checks passed\n");
}

int cmd_verify(Run& run) {
    const auto& c = run.cfg;
    VerifyOptions o;
    o.quick = c.flag("quick", false);
    o.out_dir = run.out_dir;
    o.seed = run.seed;
    o.workers = c.integer("workers", 1);
    std::stringstream ss(c.str("only", ""));
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) o.only.push_back(std::stoi(tok));
    o.on_result = [&](const CriterionResult& r) {
        std::printf("criterion %2d: %s  %s: %s\n", r.id, r.passed ? "PASS" : "FAIL", r.name.c_str(),
                    r.detail.c_str());
        std::fflush(stdout);
        run.manifest->job("criterion_" + std::to_string(r.id), r.passed ? "pass" : "fail", r.seconds);
        for (const auto& f : r.files) run.manifest->output(run.out_dir, f);
    };
    auto sum = verify_all(o);
    run.manifest->output(run.out_dir, "summary.csv");
    run.manifest->output(run.out_dir, "summary.json");
    if (sum.incomplete()) return kExitResource;
    return sum.all_passed() ? kExitOk : kExitAssert;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cone width, roughing and piecewise-congruent-map experiments"};
    app.require_subcommand(1, 1);
    std::string config_path, out_dir = ".";
    unsigned long long seed = 20240601ULL;
    app.add_option("--config", config_path, "flat key=value config file");
    app.add_option("--out-dir", out_dir, "output directory");
    app.add_option("--seed", seed, "random seed");

    struct Sub {
        std::string name, help;
        std::vector<std::pair<std::string, std::string>> keys;
    };
    const std::vector<std::pair<std::string, std::string>> width_keys = {
        {"set", "grid set file"}, {"axis", "cone axis, comma separated"}, {"sigma", "cone aperture"},
        {"radius", "stencil radius"}, {"delta0", "first dilation radius"}, {"floor", "last dilation in cells"},
        {"out", "output file"}};
    std::vector<Sub> subs = {
        {"cantor", "generate a four-corner Cantor set",
         {{"depth", "generation depth"}, {"k0", "inset parameter"}, {"N", "grid resolution"}, {"out", "output file"}}},
        {"width", "width of a set along a cone", width_keys},
        {"width-fn", "width function of an open set", width_keys},
        {"sweep", "widths over a net of directions", width_keys},
        {"xi", "nodes without eps-derivative along e",
         {{"map", "catalog name or JSON file"}, {"axis", "direction"}, {"eps", "epsilon"}, {"N", "grid resolution"},
          {"octaves", "ladder octaves"}, {"out", "set output"}, {"csv", "summary output"}}},
        {"divergence", "divergence set of two maps and its width",
         {{"f", "first map"}, {"g", "second map"}, {"perturb", "rotation angle for g = Q f"}, {"axis", "direction"},
          {"eps", "epsilon"}, {"omega", "omega"}, {"k0", "inset parameter"}, {"N", "grid resolution"},
          {"sigma", "cone aperture"}, {"radius", "stencil radius"}, {"out", "set output"}, {"csv", "summary output"}}},
        {"rough", "roughened map and its checks",
         {{"set", "compact set E"}, {"f", "smooth catalog name"}, {"eta", "eta"}, {"eps", "epsilon"},
          {"sigma", "cone aperture"}, {"lambda", "lambda"}, {"u", "target quotient"}, {"v", "bump direction"},
          {"radius", "stencil radius"}, {"delta0", "calibration start"}, {"relaxed", "budget relaxation factor"},
          {"delta_floor", "delta_E floor in cells"}, {"theta_floor", "theta floor in cells"},
          {"samples", "gradient samples"}, {"out", "JSON output"}, {"trace", "quotient trace output"}}},
        {"verify", "run the acceptance criteria",
         {{"quick", "reduced sizes (0/1)"}, {"only", "comma separated criterion ids"}, {"workers", "worker threads"}}},
    };
    std::vector<Options> opts(subs.size());
    for (std::size_t i = 0; i < subs.size(); ++i) {
        opts[i].app = app.add_subcommand(subs[i].name, subs[i].help);
        for (const auto& [k, h] : subs[i].keys) opts[i].add(k, h);
        if (subs[i].name == "sweep") {
            opts[i].add("directions", "number of directions");
            opts[i].add("workers", "worker threads");
        }
        if (subs[i].name == "width") opts[i].add("json", "JSON output");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    std::size_t which = 0;
    for (std::size_t i = 0; i < subs.size(); ++i)
        if (opts[i].app->parsed()) which = i;
    const std::string cmd = subs[which].name;

    try {
        Config cfg;
        if (!config_path.empty()) {
            Config file = Config::from_file(config_path);
            if (file.values().empty()) throw ArgumentError("config file " + config_path + " has no entries");
            cfg.merge(file);
        }
        cfg.merge(opts[which].given());
        if (cfg.has("seed")) seed = static_cast<unsigned long long>(cfg.integer("seed", 0));
        if (cfg.has("out_dir")) out_dir = cfg.str("out_dir", out_dir);
        fs::create_directories(out_dir);
        Manifest manifest(cmd, cfg, seed);
        Run run{cmd, cfg, out_dir, seed, &manifest};
        auto t0 = std::chrono::steady_clock::now();
        int code = kExitOk;
        std::string status = "pass";
        try {
            if (cmd == "cantor") cmd_cantor(run);
            else if (cmd == "width") cmd_width(run);
            else if (cmd == "width-fn") cmd_width_fn(run);
            else if (cmd == "sweep") cmd_sweep(run);
            else if (cmd == "xi") cmd_xi(run);
            else if (cmd == "divergence") cmd_divergence(run);
            else if (cmd == "rough") cmd_rough(run);
            else if (cmd == "verify") {
                code = cmd_verify(run);
                if (code != kExitOk) status = code == kExitResource ? "incomplete" : "fail";
            }
        } catch (const AssertionFailure& e) {
            std::fprintf(stderr, "assertion failed: %s\n", e.what());
            code = kExitAssert;
            status = "fail";
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (cmd != "verify") manifest.job(cmd, status, secs);
        manifest.write(out_dir);
        return code;
    } catch (const ResourceError& e) {
        std::fprintf(stderr, "resource error: %s\n", e.what());
        return kExitResource;
    } catch (const std::bad_alloc&) {
        std::fprintf(stderr, "resource error: out of memory\n");
        return kExitResource;
    } catch (const ResolutionError& e) {
        std::fprintf(stderr, "resolution error: %s\n", e.what());
        return kExitResource;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    } catch (const ParameterError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitAssert;
    }
}
