#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

#include "conewidth/errors.hpp"
#include "conewidth/experiment.hpp"
#include "conewidth/format.hpp"
#include "conewidth/maximal.hpp"
#include "conewidth/roughing.hpp"
#include "conewidth/width.hpp"

namespace cw {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Ctx {
    const VerifyOptions& opt;
    std::string dir;
    bool quick() const { return opt.quick; }
    std::mt19937_64 rng_for(int id) const { return std::mt19937_64(opt.seed + 1000003ULL * id); }
};

class Csv {
public:
    explicit Csv(std::vector<std::string> head) { os_ << csv_join(head) << '\n'; }
    void row(const std::vector<std::string>& cells) { os_ << csv_join(cells) << '\n'; }
    std::string save(const Ctx& c, const std::string& name) const {
        write_text_file((fs::path(c.dir) / name).string(), os_.str());
        return name;
    }

private:
    std::ostringstream os_;
};

std::string F(double v) { return fmt_double(v); }
std::string I(long long v) { return std::to_string(v); }

std::string vec_str(const Vec& v) {
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? " " : "") + F(v[i]);
    return s;
}

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

// ---------------------------------------------------------------- 1

CriterionResult crit_beta_identity(const Ctx& c) {
    CriterionResult r{1, "beta identity", false, false, 0, 0, "", {}};
    auto rng = c.rng_for(1);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double tol = 1e-12;
    Csv csv({"sigma", "lhs", "rhs", "rel_err"});
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        double s = U(rng);
        while (s == 0.0) s = U(rng);
        double b = beta(s);
        double lhs = 1.0 + b * b;
        double rhs = 1.0 / ((1.0 - s) * (1.0 - s));
        double err = std::abs(lhs - rhs) / rhs;
        worst = std::max(worst, err);
        csv.row({F(s), F(lhs), F(rhs), F(err)});
    }
    r.files.push_back(csv.save(c, "criterion_01_beta.csv"));
    r.passed = worst <= tol;
    r.detail = "worst relative error " + F(worst) + " over 100 samples (tol " + F(tol) + ")";
    return r;
}

// ---------------------------------------------------------------- 2

// Exhaustive enumeration of maximal source-to-sink paths.
struct Enumerator {
    const GridSet& set;
    std::vector<std::vector<std::pair<Index, double>>> out;
    std::vector<int> indeg;
    std::size_t paths = 0;
    double best = 0.0;

    Enumerator(const GridSet& s, const Cone& cone, int r) : set(s) {
        const int n = s.dim();
        out.resize(static_cast<std::size_t>(s.size()));
        indeg.assign(static_cast<std::size_t>(s.size()), 0);
        std::vector<Coord> offs;
        Coord o{0, 0, 0};
        std::function<void(int)> rec = [&](int d) {
            if (d == n) {
                Vec v(n);
                for (int k = 0; k < n; ++k) v[k] = o[k];
                if (v.norm() > 0 && cone_contains(cone, v)) offs.push_back(o);
                return;
            }
            for (int a = -r; a <= r; ++a) {
                o[d] = a;
                rec(d + 1);
            }
            o[d] = 0;
        };
        rec(0);
        for (Index i = 0; i < s.size(); ++i) {
            Coord ci = s.coords(i);
            for (const auto& of : offs) {
                Coord cj = ci;
                for (int k = 0; k < n; ++k) cj[k] += of[k];
                if (!s.in_range(cj)) continue;
                Index j = s.index(cj);
                double w = polyline_set_intersection_length(s, {s.center(i), s.center(j)});
                out[static_cast<std::size_t>(i)].push_back({j, w});
                ++indeg[static_cast<std::size_t>(j)];
            }
        }
    }

    // Number of maximal paths, by counting on the DAG.
    double count_paths() const {
        std::vector<double> memo(out.size(), -1.0);
        std::function<double(Index)> cnt = [&](Index i) -> double {
            auto& m = memo[static_cast<std::size_t>(i)];
            if (m >= 0) return m;
            const auto& es = out[static_cast<std::size_t>(i)];
            if (es.empty()) return m = 1.0;
            double t = 0;
            for (const auto& e : es) t += cnt(e.first);
            return m = t;
        };
        double total = 0;
        for (std::size_t i = 0; i < out.size(); ++i)
            if (indeg[i] == 0) total += cnt(static_cast<Index>(i));
        return total;
    }

    void dfs(Index i, double acc) {
        const auto& es = out[static_cast<std::size_t>(i)];
        if (es.empty()) {
            ++paths;
            best = std::max(best, acc);
            return;
        }
        for (const auto& e : es) dfs(e.first, acc + e.second);
    }

    double run() {
        for (std::size_t i = 0; i < out.size(); ++i)
            if (indeg[i] == 0) dfs(static_cast<Index>(i), 0.0);
        return best;
    }
};

CriterionResult crit_oracle(const Ctx& c) {
    CriterionResult r{2, "width oracle equivalence", false, false, 0, 0, "", {}};
    auto rng = c.rng_for(2);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double tol = 1e-12;
    const double max_paths = 3e6;
    struct ConeCase {
        int dim;
        Vec axis;
        double sigma;
    };
    std::vector<ConeCase> cones = {{2, vec2(1, 0), 0.1},
                                   {2, vec2(0, -1), 0.2},
                                   {2, vec2(1, 1), 0.3},
                                   {2, vec2(std::cos(0.3), std::sin(0.3)), 0.15},
                                   {1, Vec::Constant(1, 1.0), 0.1},
                                   {3, Vec::Unit(3, 2), 0.1}};
    Csv csv({"cone", "axis", "sigma", "N", "set", "cells", "paths", "dp", "oracle", "abs_diff"});
    double worst = 0.0;
    int instances = 0, mismatches = 0;
    for (std::size_t ci = 0; ci < cones.size(); ++ci) {
        const auto& cc = cones[ci];
        Cone cone(Direction(cc.axis), cc.sigma);
        for (int si = 0; si < 4; ++si) {
            const double density = si == 0 ? 0.0 : 0.25 * si;
            const int Nmax = cc.dim == 3 ? 8 : 16;
            for (int N = Nmax; N >= 8; --N) {
                GridSet s(cc.dim, N);
                std::mt19937_64 srng(rng());
                std::uniform_real_distribution<double> V(0.0, 1.0);
                if (si == 0) {
                    s.set(s.size() / 2);
                } else {
                    for (Index i = 0; i < s.size(); ++i)
                        if (V(srng) < density) s.set(i);
                }
                Enumerator en(s, cone, 2);
                double cnt = en.count_paths();
                if (cnt > max_paths) continue;
                double oracle = en.run();
                double dp = longest_path(ConeGraph(cc.dim, N, cone, 2), s).value;
                double diff = std::abs(dp - oracle);
                worst = std::max(worst, diff);
                ++instances;
                if (diff > tol) ++mismatches;
                csv.row({I(static_cast<long long>(ci)), vec_str(cone.axis().vec()), F(cc.sigma), I(N), I(si),
                         I(s.count()), F(cnt), F(dp), F(oracle), F(diff)});
                break;
            }
        }
    }
    r.files.push_back(csv.save(c, "criterion_02_oracle.csv"));
    r.passed = mismatches == 0 && instances == static_cast<int>(cones.size()) * 4;
    r.detail = I(instances) + " instances, " + I(mismatches) + " mismatches, worst |dp - oracle| " + F(worst) +
               " (tol " + F(tol) + ")";
    return r;
}

// ---------------------------------------------------------------- 3

CriterionResult crit_square_segments(const Ctx& c) {
    CriterionResult r{3, "square and segment widths", false, false, 0, 300.0, "", {}};
    const int N = c.quick() ? 64 : 512;
    const int radius = c.quick() ? 8 : 16;
    const double sigma = 0.1;
    const double h = 1.0 / N;
    const double b = beta(sigma);
    const double target = 1.0 / (1.0 - sigma);
    Cone cone(Direction::axis(2, 0), sigma);
    ConeGraph g(2, N, cone, radius);
    auto sched = default_schedule(N, 0.125, 2.0);
    Csv csv({"case", "delta", "sup_value", "reference"});

    GridSet square = axis_box(2, N, {1, 1, 0}, {N - 1, N - 1, 0});
    square.set_role(SetRole::Open);
    auto sq = estimate_width(square, g, sched, false);
    for (std::size_t k = 0; k < sched.size(); ++k) csv.row({"square", F(sched[k]), F(sq.sup_values[k]), F(target)});
    double sq_err = std::abs(sq.width - target) / target;
    bool ok_sq = sq_err <= 0.02;

    const double L = 0.5;
    GridSet hseg(2, N);
    for (int i = N / 4; i < 3 * N / 4; ++i) hseg.set(hseg.index({i, N / 2, 0}));
    auto hs = estimate_width(hseg, g, sched, false);
    for (std::size_t k = 0; k < sched.size(); ++k)
        csv.row({"axis_segment", F(sched[k]), F(hs.sup_values[k]), F(L)});
    double seg_err = std::abs(hs.width - L) / L;
    bool ok_seg = seg_err <= 0.03;
    double zig_err = std::abs(hs.width - L / (1.0 - sigma)) / (L / (1.0 - sigma));

    GridSet vseg(2, N);
    for (int j = N / 4; j < 3 * N / 4; ++j) vseg.set(vseg.index({N / 2, j, 0}));
    auto vs = estimate_width(vseg, g, sched, false);
    int vfail = 0;
    for (std::size_t k = 0; k < sched.size(); ++k) {
        double bound = (1.0 + b) * (2.0 * sched[k] + 2.0 * h);
        if (vs.sup_values[k] > bound) ++vfail;
        csv.row({"transverse_segment", F(sched[k]), F(vs.sup_values[k]), F(bound)});
    }
    r.files.push_back(csv.save(c, "criterion_03_square_segments.csv"));
    r.passed = ok_sq && ok_seg && vfail == 0;
    r.detail = "square " + F(sq.width) + " vs " + F(target) + " (rel " + F(sq_err) + ", tol 0.02, " +
               (ok_sq ? "ok" : "FAIL") + "); axis segment " + F(hs.width) + " vs length " + F(L) + " (rel " +
               F(seg_err) + ", tol 0.03, " + (ok_seg ? "ok" : "FAIL") + "; rel to L/(1-sigma) " + F(zig_err) +
               "); transverse segment violations " + I(vfail) + "/" + I(static_cast<long long>(sched.size()));
    return r;
}

// ---------------------------------------------------------------- 4

CriterionResult crit_cantor_sweep(const Ctx& c) {
    CriterionResult r{4, "cantor width decreasing", false, false, 0, 600.0, "", {}};
    const int N = c.quick() ? 256 : 2048;
    const int depths = c.quick() ? 3 : 4;
    const int k0 = 8;
    const double sigma = 0.1;
    const int radius = 4;
    const int K = c.quick() ? 8 : 16;
    const double h = 1.0 / N;
    std::vector<double> sched = {8 * h, 4 * h, 2 * h};
    std::vector<GridSet> sets;
    for (int d = 1; d <= depths; ++d) sets.push_back(cached_cantor(d, k0, N));
    auto dirs = sweep_directions(2, K);
    std::vector<double> maxw(depths, 0.0);
    Csv csv({"depth", "direction", "delta", "sup_value"});
    for (std::size_t di = 0; di < dirs.size(); ++di) {
        ConeGraph g(2, N, Cone(dirs[di], sigma), radius);
        for (int d = 0; d < depths; ++d) {
            auto rep = estimate_width(sets[d], g, sched, false);
            for (std::size_t k = 0; k < sched.size(); ++k)
                csv.row({I(d + 1), vec_str(dirs[di].vec()), F(sched[k]), F(rep.sup_values[k])});
            maxw[d] = std::max(maxw[d], rep.width);
        }
    }
    r.files.push_back(csv.save(c, "criterion_04_cantor_sweep.csv"));
    Csv sum({"depth", "max_width"});
    bool dec = true;
    std::string seq;
    for (int d = 0; d < depths; ++d) {
        sum.row({I(d + 1), F(maxw[d])});
        if (d > 0 && !(maxw[d] < maxw[d - 1])) dec = false;
        seq += (d ? " > " : "") + F(maxw[d]);
    }
    r.files.push_back(sum.save(c, "criterion_04_cantor_max.csv"));
    r.passed = dec;
    r.detail = "max width by depth: " + seq + " (N " + I(N) + ", " + I(K) + " directions)";
    return r;
}

// ---------------------------------------------------------------- 5

struct LipCounts {
    std::size_t pairs = 0, violations = 0;
    double worst_slack = -std::numeric_limits<double>::infinity();
};

CriterionResult crit_width_function(const Ctx& c) {
    CriterionResult r{5, "width function bounds", false, false, 0, 0, "", {}};
    const int N = c.quick() ? 64 : 256;
    const double h = 1.0 / N;
    const double sigma = 0.1;
    const double b = beta(sigma);
    const int radius = 4;
    GridSet E = cached_cantor(c.quick() ? 2 : 3, 8, N);
    GridSet omega = dilate(E, 4 * h);
    const double tol = 2.0 * h * (1.0 + b);
    Csv csv({"axis", "check", "pairs", "violations", "worst_slack"});
    std::size_t total_viol = 0, total_pairs = 0;
    std::vector<Coord> axes = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}};
    for (const auto& ax : axes) {
        Vec e = vec2(ax[0], ax[1]);
        auto w = width_function(omega, Cone(Direction(e), sigma), radius);
        Coord tr{ax[1], ax[0], 0};
        LipCounts mono, trans, lip;
        auto visit = [&](const Coord& step, auto&& check) {
            for (Index i = 0; i < omega.size(); ++i) {
                Coord a = omega.coords(i), bb = a;
                for (int d = 0; d < 2; ++d) bb[d] += step[d];
                if (!omega.in_range(bb)) continue;
                check(w.at(i), w.at(omega.index(bb)));
            }
        };
        auto record = [](LipCounts& lc, double slack) {
            ++lc.pairs;
            if (slack > 0) ++lc.violations;
            lc.worst_slack = std::max(lc.worst_slack, slack);
        };
        visit(ax, [&](double w0, double w1) {
            double dw = w1 - w0;
            record(mono, std::max(-dw, dw - (h + tol)));
        });
        for (int sg : {1, -1}) {
            Coord st{sg * tr[0], sg * tr[1], 0};
            visit(st, [&](double w0, double w1) { record(trans, std::abs(w1 - w0) - (b * h + tol)); });
        }
        for (Coord st : std::vector<Coord>{{1, 0, 0}, {0, 1, 0}})
            visit(st, [&](double w0, double w1) { record(lip, std::abs(w1 - w0) - ((1.0 + b) * h + 2.0 * h)); });
        for (auto* p : {&mono, &trans, &lip}) {
            const char* name = p == &mono ? "axis_monotone" : p == &trans ? "transverse" : "lipschitz";
            csv.row({vec_str(e), name, I(static_cast<long long>(p->pairs)),
                     I(static_cast<long long>(p->violations)), F(p->worst_slack)});
            total_viol += p->violations;
            total_pairs += p->pairs;
        }
    }
    r.files.push_back(csv.save(c, "criterion_05_width_function.csv"));
    r.passed = total_viol == 0;
    r.detail = I(static_cast<long long>(total_viol)) + " violations over " + I(static_cast<long long>(total_pairs)) +
               " adjacent pairs (4 axis directions, N " + I(N) + ")";
    return r;
}

// ---------------------------------------------------------------- 6, 7

struct RoughSetup {
    GridSet E;
    RoughingParams p;
};

RoughSetup rough_setup(const Ctx& c) {
    RoughSetup s;
    const int N = c.quick() ? 64 : 256;
    s.E = cached_cantor(c.quick() ? 2 : 3, 8, N);
    s.p.eta = 0.045;
    s.p.eps = 0.5;
    s.p.sigma = 0.01;
    s.p.lambda = 0.9;
    s.p.radius = 8;
    s.p.delta0 = 0.25;
    s.p.v = Direction::axis(2, 0);
    s.p.u = Vec::Unit(2, 0);
    s.p.relax = 1e12;
    s.p.delta_floor_cells = 9.0;
    s.p.theta_floor_cells = 1.5;
    return s;
}

CriterionResult crit_G_bounds(const Ctx& c) {
    CriterionResult r{6, "roughing map G bounds", false, false, 0, 0, "", {}};
    auto s = rough_setup(c);
    auto f = smooth_catalog("zero", 2, 2, c.opt.seed);
    auto Fr = rough(f, s.E, s.p);
    auto rep = check_G_bounds(Fr, s.E, 16);
    Csv csv({"quantity", "value", "bound"});
    csv.row({"sup_norm", F(rep.sup_norm), F(rep.sup_bound)});
    csv.row({"worst_quotient", F(rep.worst_quotient), F(rep.quotient_bound)});
    csv.row({"checks", I(static_cast<long long>(rep.checks)), ""});
    csv.row({"failures", I(static_cast<long long>(rep.failures)), "0"});
    csv.row({"delta_E", F(Fr.calibration().delta_E), ""});
    r.files.push_back(csv.save(c, "criterion_06_G_bounds.csv"));
    r.passed = rep.ok();
    r.detail = "|G| " + F(rep.sup_norm) + " (bound " + F(rep.sup_bound) + "); quotient worst " + F(rep.worst_quotient) +
               " vs " + F(rep.quotient_bound) + ", " + I(static_cast<long long>(rep.failures)) + "/" +
               I(static_cast<long long>(rep.checks)) + " violations";
    return r;
}

CriterionResult crit_roughing(const Ctx& c) {
    CriterionResult r{7, "roughened map checks", false, false, 0, 900.0, "", {}};
    auto s = rough_setup(c);
    const std::size_t samples = c.quick() ? 1000 : 10000;
    Csv csv({"function", "sup_distance", "sup_bound", "grad_failures", "grad_samples", "grad_worst", "grad_bound",
             "quotient_fraction", "quotient_worst", "quotient_bound", "h_star"});
    bool sup_ok = true, grad_ok = true, quot_ok = true;
    std::size_t gfail = 0, gtotal = 0;
    double min_frac = 1.0;
    for (const auto& name : smooth_catalog_names()) {
        auto f = smooth_catalog(name, 2, 2, c.opt.seed);
        auto Fr = rough(f, s.E, s.p);
        auto sn = check_sup_norm(Fr, s.E.N());
        auto gr = check_gradient(Fr, samples, c.opt.seed + 7);
        auto qr = verify_quotients(Fr, s.E, 5);
        sup_ok = sup_ok && sn.ok();
        grad_ok = grad_ok && gr.failures == 0;
        quot_ok = quot_ok && qr.fraction() >= 0.99;
        gfail += gr.failures;
        gtotal += gr.samples;
        min_frac = std::min(min_frac, qr.fraction());
        csv.row({name, F(sn.max_distance), F(sn.bound), I(static_cast<long long>(gr.failures)),
                 I(static_cast<long long>(gr.samples)), F(gr.worst), F(gr.bound), F(qr.fraction()), F(qr.worst),
                 F(qr.bound), F(Fr.calibration().h_star)});
        write_text_file((fs::path(c.dir) / ("criterion_07_trace_" + name + ".csv")).string(), qr.trace_csv());
        r.files.push_back("criterion_07_trace_" + name + ".csv");
    }
    r.files.push_back(csv.save(c, "criterion_07_roughing.csv"));

    // Strict budget: the predicate on its own.
    bool strict_ok = true;
    Csv bud({"function", "bound", "desk_sum", "desk_ok", "half_bound_ok", "double_bound_ok", "strict_rough_refused"});
    for (const auto& name : smooth_catalog_names()) {
        auto f = smooth_catalog(name, 2, 2, c.opt.seed);
        double desk = s.p.sigma + s.p.eps + s.p.lambda;
        auto bc = budget_check(2, f.sup_d2f(), f.sup_d3f(), s.p.eta, desk, 1.0);
        auto half = budget_check(2, f.sup_d2f(), f.sup_d3f(), s.p.eta, 0.5 * bc.bound, 1.0);
        auto twice = budget_check(2, f.sup_d2f(), f.sup_d3f(), s.p.eta, 2.0 * bc.bound, 1.0);
        bool refused = false;
        RoughingParams strict = s.p;
        strict.relax = 1.0;
        try {
            (void)rough(f, s.E, strict);
        } catch (const ParameterError&) {
            refused = true;
        }
        bool ok = bc.bound > 0 && half.ok && !twice.ok && !bc.ok && refused;
        strict_ok = strict_ok && ok;
        bud.row({name, F(bc.bound), F(desk), bc.ok ? "1" : "0", half.ok ? "1" : "0", twice.ok ? "1" : "0",
                 refused ? "1" : "0"});
    }
    r.files.push_back(bud.save(c, "criterion_07_budget.csv"));
    r.passed = sup_ok && grad_ok && quot_ok && strict_ok;
    r.detail = std::string("sup-norm ") + (sup_ok ? "ok" : "FAIL") + "; gradient " + I(static_cast<long long>(gfail)) +
               "/" + I(static_cast<long long>(gtotal)) + " samples at or above 1-eta^2 (" +
               (grad_ok ? "ok" : "FAIL") + "); quotient min fraction " + F(min_frac) + " (" +
               (quot_ok ? "ok" : "FAIL") + "); strict budget predicate " + (strict_ok ? "ok" : "FAIL");
    return r;
}

// ---------------------------------------------------------------- 8

CriterionResult crit_xi(const Ctx& c) {
    CriterionResult r{8, "Xi set widths", false, false, 0, 0, "", {}};
    const double eps = 0.08;
    const double sigma = eps * eps / 4.0;
    const int N2 = c.quick() ? 64 : 256;
    const int N1 = c.quick() ? 256 : 1024;
    const int pad = 2;
    const int radius = 4;
    auto rng = c.rng_for(8);
    struct Case {
        std::string name;
        PiecewiseCongruentMap f;
    };
    std::vector<Case> maps;
    for (const auto& nm : {"tent", "zigzag", "identity2", "rotation2", "fold_diagonal", "fold_cross"})
        maps.push_back({nm, pcm_catalog(nm)});
    for (int k = 0; k < 2; ++k) maps.push_back({"random_folds_" + I(k), pcm_random(2, rng, 3)});
    Csv csv({"map", "n", "N", "xi_cells", "raster_cells", "xi_in_raster", "width_xi", "width_raster"});
    int fails = 0;
    for (const auto& m : maps) {
        const int n = m.f.dim();
        const int N = n == 1 ? N1 : N2;
        const double h = 1.0 / N;
        Direction e = Direction::axis(n, 0);
        Cone cone(e, sigma);
        auto xi = xi_set(m.f, e, eps, N);
        GridSet raster = null_face_raster(m.f.partition(), cone, N, h * (1.0 + 1e-9));
        bool inside = xi.marked.subset_of(raster);
        GridSet px = pad_grid_set(xi.marked, pad), pr = pad_grid_set(raster, pad);
        const int Np = N + 2 * pad;
        auto sched = default_schedule(Np, 0.125, 2.0);
        ConeGraph g(n, Np, cone, radius);
        double scale = double(Np) / N;
        double wx = estimate_width(px, g, sched, false).width * scale;
        double wr = estimate_width(pr, g, sched, false).width * scale;
        bool ok = inside && wx <= wr;
        if (!ok) ++fails;
        csv.row({m.name, I(n), I(N), I(xi.marked.count()), I(raster.count()), inside ? "1" : "0", F(wx), F(wr)});
    }
    r.files.push_back(csv.save(c, "criterion_08_xi.csv"));
    r.passed = fails == 0;
    r.detail = I(static_cast<long long>(maps.size())) + " maps, " + I(fails) +
               " with Xi outside the null-face raster or wider than it (eps " + F(eps) + ", sigma " + F(sigma) + ")";
    return r;
}

// ---------------------------------------------------------------- 9

double brute_maximal(const StepSignal& s, double t) {
    std::vector<double> ends = s.breaks;
    ends.push_back(t);
    std::sort(ends.begin(), ends.end());
    auto mass = [&](double a, double b) {
        double m = 0.0;
        for (std::size_t k = 0; k + 1 < s.breaks.size(); ++k) {
            double lo = std::max(a, s.breaks[k]), hi = std::min(b, s.breaks[k + 1]);
            if (hi > lo) m += s.values[k] * (hi - lo);
        }
        return m;
    };
    double best = 0.0;
    for (std::size_t k = 0; k + 1 < s.breaks.size(); ++k)
        if (s.breaks[k] <= t && t <= s.breaks[k + 1]) best = std::max(best, s.values[k]);
    for (double a : ends)
        for (double b : ends) {
            if (!(a <= t && t <= b && a < b)) continue;
            best = std::max(best, mass(a, b) / (b - a));
        }
    return best;
}

StepSignal random_signal(std::mt19937_64& rng, int pieces) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    StepSignal s;
    s.breaks.push_back(0.0);
    for (int k = 0; k < pieces; ++k) s.breaks.push_back(s.breaks.back() + 0.01 + U(rng));
    for (int k = 0; k < pieces; ++k) {
        double v = U(rng);
        s.values.push_back(v < 0.2 ? 0.0 : 3.0 * v);
    }
    return s;
}

std::optional<ConeCurve> random_cone_curve(const Cone& cone, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::normal_distribution<double> G(0.0, 1.0);
    const int n = cone.dim();
    const Vec& e = cone.axis().vec();
    const double b = beta(cone.sigma());
    for (int attempt = 0; attempt < 100; ++attempt) {
        Vec x(n);
        for (int d = 0; d < n; ++d) x[d] = 0.5 + 0.1 * (U(rng) - 0.5);
        x -= 0.35 * e;
        bool inside = (x.array() >= 0.0).all() && (x.array() <= 1.0).all();
        if (!inside) continue;
        std::vector<Vec> pts{x};
        for (int k = 0; k < 12; ++k) {
            Vec w = Vec::Zero(n);
            if (n > 1) {
                for (int d = 0; d < n; ++d) w[d] = G(rng);
                w -= w.dot(e) * e;
                if (w.norm() > 1e-9) w *= (0.95 * (2.0 * U(rng) - 1.0) * b) / w.norm();
            }
            Vec y = pts.back() + (0.03 + 0.12 * U(rng)) * (e + w);
            if (!((y.array() >= 0.0).all() && (y.array() <= 1.0).all())) break;
            pts.push_back(y);
        }
        if (pts.size() >= 3) return ConeCurve(pts, cone);
    }
    return std::nullopt;
}

CriterionResult crit_maximal(const Ctx& c) {
    CriterionResult r{9, "maximal inequalities", false, false, 0, 0, "", {}};
    auto rng = c.rng_for(9);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double rel_tol = 1e-12;
    const int ps[3] = {5, 6, 8};
    Csv sc({"signal", "breakpoints", "p", "lhs", "rhs", "ratio", "max_rel_scan_diff"});
    int scalar_fail = 0;
    double worst_scan = 0.0;
    for (int k = 0; k < 20; ++k) {
        int pieces = 1 + static_cast<int>(U(rng) * 49);
        auto s = random_signal(rng, pieces);
        double diff = 0.0;
        std::vector<double> ts = s.breaks;
        ts.erase(ts.begin());
        ts.pop_back();
        for (int j = 0; j < 200; ++j) ts.push_back(s.breaks.front() + U(rng) * (s.breaks.back() - s.breaks.front()));
        for (double t : ts) {
            double a = maximal_at(s, t), b = brute_maximal(s, t);
            double d = std::abs(a - b) / std::max(1.0, std::abs(b));
            diff = std::max(diff, d);
        }
        worst_scan = std::max(worst_scan, diff);
        if (diff > rel_tol) ++scalar_fail;
        for (int p : ps) {
            double lhs = maximal_lp_pow(s, p), rhs = maximal_constant_pow(p) * s.lp_pow(p);
            if (!(lhs <= rhs)) ++scalar_fail;
            sc.row({I(k), I(static_cast<long long>(s.breaks.size())), I(p), F(lhs), F(rhs),
                    F(rhs > 0 ? lhs / rhs : 0.0), F(diff)});
        }
    }
    r.files.push_back(sc.save(c, "criterion_09_scalar.csv"));

    Csv pc({"tuple", "n", "p", "pieces", "sup_distance", "lhs", "rhs", "ratio"});
    int pcm_fail = 0;
    double worst_ratio = 0.0;
    for (int k = 0; k < 20; ++k) {
        int n = k % 4 == 3 ? 1 : 2;
        int p = ps[k % 3];
        auto f = pcm_random(n, rng, 3);
        auto g = pcm_random(n, rng, 3);
        Vec ax(n);
        if (n == 1) {
            ax[0] = U(rng) < 0.5 ? 1.0 : -1.0;
        } else {
            double a = 2.0 * M_PI * U(rng);
            ax << std::cos(a), std::sin(a);
        }
        Cone cone(Direction(ax), 0.05 + 0.35 * U(rng));
        auto curve = random_cone_curve(cone, rng);
        if (!curve) throw ValidationError("could not sample a cone curve");
        auto cc = canonicalize(*curve, cone);
        double sd = pcm_sup_distance(f, g);
        auto res = curve_maximal_bound(f, g, cc, p, sd);
        double ratio = res.rhs > 0 ? res.lhs / res.rhs : 0.0;
        worst_ratio = std::max(worst_ratio, ratio);
        if (!res.holds()) ++pcm_fail;
        pc.row({I(k), I(n), I(p), I(static_cast<long long>(res.pieces)), F(sd), F(res.lhs), F(res.rhs), F(ratio)});
    }
    r.files.push_back(pc.save(c, "criterion_09_pcm.csv"));
    r.passed = scalar_fail == 0 && pcm_fail == 0;
    r.detail = "scalar failures " + I(scalar_fail) + " (scan vs brute worst rel " + F(worst_scan) + ", tol " +
               F(rel_tol) + "); PCM failures " + I(pcm_fail) + "/20, largest lhs/rhs " + F(worst_ratio);
    return r;
}

// ---------------------------------------------------------------- 10

Mat rot2(double a) {
    Mat Q(2, 2);
    Q << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    return Q;
}

CriterionResult crit_divergence(const Ctx& c) {
    CriterionResult r{10, "divergence set widths", false, false, 0, 0, "", {}};
    auto rng = c.rng_for(10);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const int N = c.quick() ? 32 : 128;
    const int k0 = 9;
    const double eps = 0.01, omega = 0.01;
    const double h = 1.0 / N;
    const int radius = 4;
    const double inset = 4.0 / k0;
    auto names = std::vector<std::string>{"identity2", "rotation2", "fold_diagonal", "fold_cross"};
    Csv csv({"pair", "f", "axis", "budget", "sup_distance", "cells", "width", "bound"});
    Csv ex({"pair", "f", "perturbation", "sup_distance", "cells", "inset_cells", "width", "stability_pairs",
            "stability_failures", "stability_worst_ratio"});
    int fails = 0;
    for (int k = 0; k < 20; ++k) {
        auto f = k % 2 == 0 ? pcm_random(2, rng, 3) : pcm_catalog(names[(k / 2) % names.size()]);
        const std::size_t card = f.cell_count();
        const double budget = divergence_diameter_budget(2, card, eps, omega);
        const double sigma = std::ldexp(1.0, -11) * std::pow(eps, 4) / double(card);
        double a = 0.25 * budget * (2.0 * U(rng) - 1.0);
        Vec cvec = vec2(0.25 * budget * U(rng), 0.25 * budget * U(rng));
        auto g = pcm_postcompose(f, rot2(a), cvec);
        double sd = pcm_sup_distance(f, g);
        if (!(sd <= budget)) throw ValidationError("divergence pair exceeds the diameter budget");
        Direction e = Direction::axis(2, k % 2);
        auto dv = divergence_set(f, g, e, eps, k0, N);
        GridSet inner = restrict_to_inset(dv.marked, inset);
        Cone cone(e, sigma);
        auto sched = default_schedule(N, 0.125, 2.0);
        double w = estimate_width(inner, cone, sched, radius, false).width;
        double bound = (1.0 + std::sqrt(2.0)) * omega + grid_tolerance(h, sigma);
        if (!(w < bound)) ++fails;
        csv.row({I(k), f.name(), vec_str(e.vec()), F(budget), F(sd), I(inner.count()), F(w), F(bound)});

        if (k < 5) {
            // Outside the budget, for the record only.
            auto g2 = pcm_postcompose(f, rot2(0.2), vec2(0.01, 0.0));
            auto dv2 = divergence_set(f, g2, e, eps, k0, N);
            GridSet in2 = restrict_to_inset(dv2.marked, inset);
            double w2 = estimate_width(in2, Cone(e, 0.01), sched, radius, false).width;
            auto st = quotient_stability(f, g2, dv2, e, eps, 4, c.opt.seed + k);
            ex.row({I(k), f.name(), "rotation 0.2", F(pcm_sup_distance(f, g2)), I(dv2.marked.count()),
                    I(in2.count()), F(w2), I(static_cast<long long>(st.pairs)),
                    I(static_cast<long long>(st.failures)), F(st.pairs ? st.worst_ratio : 0.0)});
        }
    }
    r.files.push_back(csv.save(c, "criterion_10_divergence.csv"));
    r.files.push_back(ex.save(c, "criterion_10_exploratory.csv"));
    r.passed = fails == 0;
    r.detail = I(fails) + " violations over 20 pairs within the diameter budget (N " + I(N) + ", k0 " + I(k0) + ")";
    return r;
}

// ---------------------------------------------------------------- 11

CriterionResult crit_determinism(const Ctx& c) {
    CriterionResult r{11, "deterministic outputs", false, false, 0, 0, "", {}};
    std::vector<std::string> dirs;
    for (const char* sub : {"run_a", "run_b"}) {
        VerifyOptions o;
        o.quick = true;
        o.seed = c.opt.seed;
        o.out_dir = (fs::path(c.dir) / "criterion_11" / sub).string();
        for (int id = 1; id <= 10; ++id) o.only.push_back(id);
        fs::remove_all(o.out_dir);
        (void)verify_all(o);
        dirs.push_back(o.out_dir);
    }
    std::vector<std::string> files;
    for (const auto& ent : fs::directory_iterator(dirs[0]))
        if (ent.path().extension() == ".csv") files.push_back(ent.path().filename().string());
    std::sort(files.begin(), files.end());
    int diff = 0;
    Csv csv({"file", "sha256_a", "sha256_b", "identical"});
    for (const auto& f : files) {
        auto pa = (fs::path(dirs[0]) / f).string(), pb = (fs::path(dirs[1]) / f).string();
        bool same = fs::exists(pb) && read_text_file(pa) == read_text_file(pb);
        if (!same) ++diff;
        csv.row({f, sha256_file(pa), fs::exists(pb) ? sha256_file(pb) : "", same ? "1" : "0"});
    }
    std::size_t nb = 0;
    for (const auto& ent : fs::directory_iterator(dirs[1]))
        if (ent.path().extension() == ".csv") ++nb;
    if (nb != files.size()) ++diff;
    r.files.push_back(csv.save(c, "criterion_11_determinism.csv"));
    r.passed = diff == 0 && !files.empty();
    r.detail = I(static_cast<long long>(files.size())) + " CSV files compared, " + I(diff) + " differ";
    return r;
}

}  // namespace

VerifySummary verify_all(const VerifyOptions& opt) {
    fs::create_directories(opt.out_dir);
    Ctx ctx{opt, opt.out_dir};
    using Fn = CriterionResult (*)(const Ctx&);
    const std::vector<std::pair<int, Fn>> all = {
        {1, crit_beta_identity}, {2, crit_oracle},    {3, crit_square_segments}, {4, crit_cantor_sweep},
        {5, crit_width_function}, {6, crit_G_bounds}, {7, crit_roughing},        {8, crit_xi},
        {9, crit_maximal},        {10, crit_divergence}, {11, crit_determinism}};
    VerifySummary sum;
    for (const auto& [id, fn] : all) {
        if (!opt.only.empty() && std::find(opt.only.begin(), opt.only.end(), id) == opt.only.end()) continue;
        if (opt.quick && id == 11) continue;
        auto t0 = Clock::now();
        CriterionResult res;
        try {
            res = fn(ctx);
        } catch (const ResourceError& ex) {
            res = CriterionResult{};
            res.id = id;
            res.name = "criterion " + std::to_string(id);
            res.incomplete = true;
            res.detail = std::string("resource cap: ") + ex.what();
        } catch (const std::exception& ex) {
            res = CriterionResult{};
            res.id = id;
            res.name = "criterion " + std::to_string(id);
            res.passed = false;
            res.detail = std::string("error: ") + ex.what();
        }
        res.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        if (!opt.quick && res.budget_seconds > 0 && res.seconds >= res.budget_seconds) {
            res.passed = false;
            res.detail += "; runtime over budget";
        }
        if (opt.on_result) opt.on_result(res);
        sum.results.push_back(res);
    }
    std::ostringstream os;
    os << "id,name,passed,detail\n";
    for (const auto& r : sum.results)
        os << csv_join({std::to_string(r.id), r.name, r.passed ? "PASS" : "FAIL", r.detail}) << '\n';
    write_text_file((fs::path(opt.out_dir) / "summary.csv").string(), os.str());
    nlohmann::json j;
    j["passed"] = sum.all_passed();
    j["incomplete"] = sum.incomplete();
    j["quick"] = opt.quick;
    j["seed"] = opt.seed;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : sum.results)
        rows.push_back({{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"incomplete", r.incomplete},
                        {"detail", r.detail}, {"files", r.files}});
    j["criteria"] = rows;
    write_text_file((fs::path(opt.out_dir) / "summary.json").string(), j.dump(2) + "\n");
    return sum;
}

}  // namespace cw
