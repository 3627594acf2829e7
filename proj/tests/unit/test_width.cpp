#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <set>

#include "conewidth/errors.hpp"
#include "conewidth/width.hpp"

using namespace cw;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

bool has_step(const std::vector<StencilEdge>& st, Coord c) {
    for (const auto& e : st)
        if (e.step == c) return true;
    return false;
}

// Longest path by memoized recursion over all lattice offsets in the cone.
double oracle_longest(const GridSet& s, const Cone& cone, int r) {
    const int n = s.dim(), N = s.N();
    std::vector<Coord> offs;
    Coord lo{0, 0, 0}, hi{0, 0, 0};
    for (int d = 0; d < n; ++d) lo[d] = -r, hi[d] = r;
    for (int a = lo[0]; a <= hi[0]; ++a)
        for (int b = lo[1]; b <= hi[1]; ++b)
            for (int c = lo[2]; c <= hi[2]; ++c) {
                Vec o(n);
                Coord k{a, b, c};
                for (int d = 0; d < n; ++d) o[d] = k[d];
                if (cone_contains(cone, o)) offs.push_back(k);
            }
    std::vector<double> memo(s.size(), -1.0);
    std::function<double(Index)> best = [&](Index v) -> double {
        if (memo[v] >= 0) return memo[v];
        double b = 0.0;
        Coord cv = s.coords(v);
        for (const auto& o : offs) {
            Coord w{cv[0] + o[0], cv[1] + o[1], cv[2] + o[2]};
            if (!s.in_range(w)) continue;
            Index iw = s.index(w);
            double len = polyline_set_intersection_length(s, {s.center(v), s.center(iw)});
            b = std::max(b, len + best(iw));
        }
        return memo[v] = b;
    };
    double out = 0.0;
    for (Index v = 0; v < s.size(); ++v) out = std::max(out, best(v));
    return out;
}

GridSet random_set(int n, int N, double density, std::mt19937_64& rng) {
    GridSet s(n, N);
    std::bernoulli_distribution B(density);
    for (Index i = 0; i < s.size(); ++i) s.set(i, B(rng));
    return s;
}

}  // namespace

TEST_SUITE("width") {

TEST_CASE("stencil membership") {
    Cone c(Direction::axis(2, 0), 0.1);
    auto st = cone_stencil(2, 64, c, 4);
    CHECK(has_step(st, {4, 1, 0}));
    CHECK_FALSE(has_step(st, {4, 3, 0}));
    CHECK_FALSE(has_step(st, {0, 1, 0}));
    for (const auto& e : st) {
        double sum = 0.0;
        for (const auto& p : e.pieces) sum += p.length;
        CHECK(sum == doctest::Approx(e.length).epsilon(1e-12));
    }
    auto one = cone_stencil(1, 64, Cone(Direction::axis(1, 0), 0.1), 5);
    std::set<int> steps;
    for (const auto& e : one) steps.insert(e.step[0]);
    CHECK(steps == std::set<int>{1, 2, 3, 4, 5});
    CHECK_THROWS_AS(cone_stencil(2, 64, c, 1), DomainError);
    CHECK_THROWS_AS(cone_stencil(2, 64, c, kMaxStencilRadius + 1), DomainError);
}

TEST_CASE("dynamic program matches the recursive oracle") {
    std::mt19937_64 rng(7);
    struct Case {
        Vec axis;
        double sigma;
        int n, N, r;
    };
    Vec e3(3);
    e3 << 0.2, -0.1, 1.0;
    std::vector<Case> cases{{v2(1, 0), 0.1, 2, 12, 3},   {v2(-0.3, 1), 0.25, 2, 10, 3},
                            {v2(1, 1), 0.3, 2, 9, 2},    {Vec::Constant(1, -1.0), 0.1, 1, 16, 4},
                            {e3, 0.15, 3, 8, 2}};
    for (const auto& k : cases) {
        Cone cone{Direction(k.axis), k.sigma};
        ConeGraph g(k.n, k.N, cone, k.r);
        for (double dens : {0.3, 0.6, 1.0}) {
            auto s = random_set(k.n, k.N, dens, rng);
            double dp = longest_path(g, s).value;
            double ref = oracle_longest(s, cone, k.r);
            CHECK(std::abs(dp - ref) <= 1e-12);
        }
    }
}

TEST_CASE("witness path carries the reported value") {
    std::mt19937_64 rng(3);
    Cone cone(Direction::axis(2, 0), 0.2);
    ConeGraph g(2, 16, cone, 3);
    auto s = random_set(2, 16, 0.5, rng);
    auto r = longest_path(g, s);
    REQUIRE(r.nodes.size() >= 2);
    std::vector<Vec> pts;
    for (Index v : r.nodes) pts.push_back(s.center(v));
    CHECK(polyline_set_intersection_length(s, pts) == doctest::Approx(r.value).epsilon(1e-12));
    auto curve = path_to_curve(g, r.nodes);
    CHECK(curve.has_value());
}

TEST_CASE("empty set, monotonicity and the diameter bound") {
    const int N = 64;
    Cone cone(Direction::axis(2, 0), 0.1);
    ConeGraph g(2, N, cone, 4);
    GridSet empty(2, N);
    CHECK(longest_path(g, empty).value == 0.0);
    auto a = four_corner_cantor(2, 8, N);
    auto b = dilate(a, 2.0 / N);
    auto full = GridSet(2, N);
    for (Index i = 0; i < full.size(); ++i) full.set(i);
    double wa = longest_path(g, a).value, wb = longest_path(g, b).value, wf = longest_path(g, full).value;
    CHECK(wa <= wb);
    CHECK(wb <= wf);
    CHECK(wf <= std::sqrt(2.0) * (1 + beta(0.1)));
    auto sched = default_schedule(N, 0.125, 2);
    auto rep = estimate_width(a, cone, sched, 4);
    for (std::size_t k = 1; k < rep.sup_values.size(); ++k) CHECK(rep.sup_values[k] <= rep.sup_values[k - 1] + 1e-15);
    CHECK(rep.width == rep.sup_values.back());
}

TEST_CASE("schedule validation") {
    auto a = four_corner_cantor(1, 8, 64);
    Cone cone(Direction::axis(2, 0), 0.1);
    CHECK_THROWS_AS(estimate_width(a, cone, {}, 4), ArgumentError);
    CHECK_THROWS_AS(estimate_width(a, cone, {0.1, 0.2}, 4), ArgumentError);
    CHECK_THROWS_AS(estimate_width(a, cone, {0.1, -0.05}, 4), ArgumentError);
    CHECK_THROWS_AS(estimate_width(a, cone, {0.1, 1.0 / 64}, 4), ArgumentError);
    auto touching = axis_box(2, 64, {0, 10, 0}, {20, 20, 0});
    CHECK_THROWS_AS(estimate_width(touching, cone, {0.1, 0.05}, 4), DomainError);
    auto s = default_schedule(256, 0.125, 2);
    CHECK(s.front() == 0.125);
    CHECK(s.back() >= 2.0 / 256);
    CHECK(s.back() / 2 < 2.0 / 256);
}

TEST_CASE("width function along a strip") {
    const int N = 64;
    const double h = 1.0 / N;
    Cone cone(Direction::axis(2, 0), 0.1);
    auto om = axis_box(2, N, {8, 30, 0}, {55, 33, 0});
    om.set_role(SetRole::Open);
    auto w = width_function(om, cone, 4);
    for (double x : w.values()) CHECK(x >= 0.0);
    const double tol = grid_tolerance(h, 0.1);
    for (int i = 8; i + 8 <= 55; ++i) {
        double a = w.at(om.index({i, 31, 0}));
        double b = w.at(om.index({i + 8, 31, 0}));
        CHECK(b - a >= 8 * h - tol);
        CHECK(b - a <= 8 * h + tol);
    }
}

TEST_CASE("difference test and subcone search") {
    const int N = 64;
    Cone cone(Direction::axis(2, 0), 0.2);
    auto sched = default_schedule(N, 0.125, 2);
    auto e = axis_box(2, N, {20, 20, 0}, {23, 40, 0});
    auto a = axis_box(2, N, {10, 20, 0}, {50, 40, 0});
    auto d = width_difference_positive(a, e, cone, sched, 4);
    CHECK(d.verdict == Verdict::Positive);
    CHECK(d.width_a >= d.width_e);
    CHECK_THROWS_AS(width_difference_positive(e, a, cone, sched, 4), ArgumentError);

    auto same = width_difference_positive(a, a, cone, sched, 4);
    CHECK(same.verdict == Verdict::Inconclusive);

    auto net = subcone_net(cone, 0.05);
    REQUIRE(!net.empty());
    CHECK((net.front().vec() - cone.axis().vec()).norm() < 1e-12);
    for (const auto& dir : net) CHECK(cone_contains(cone, dir.vec()));
    for (std::size_t k = 1; k < net.size(); ++k) {
        double best = 1e9;
        for (std::size_t j = 0; j < k; ++j) best = std::min(best, (net[k].vec() - net[j].vec()).norm());
        CHECK(best <= 0.05 / 2 + 1e-12);
    }
    auto sr = subcone_search(e, cone, 0.05, sched, 4);
    CHECK(sr.tried >= 1);
    CHECK(sr.direction.has_value());

    auto seg = axis_box(2, N, {16, 32, 0}, {48, 33, 0});
    auto hit = subcone_search(seg, Cone(Direction::axis(2, 0), 0.3), 0.1, sched, 4);
    REQUIRE(hit.direction.has_value());
    CHECK((hit.direction->vec() - Vec::Unit(2, 0)).norm() <= 0.1);
    CHECK_FALSE(subcone_search(GridSet(2, N), cone, 0.05, sched, 4).direction.has_value());
}

TEST_CASE("sweep is deterministic across worker counts") {
    auto s = four_corner_cantor(2, 8, 64);
    auto dirs = sweep_directions(2, 6);
    CHECK(dirs.size() == 6);
    auto sched = default_schedule(64, 0.125, 2);
    auto a = uniform_sweep(s, dirs, 0.1, sched, 3, 1);
    auto b = uniform_sweep(s, dirs, 0.1, sched, 3, 3);
    CHECK(sweep_csv(a) == sweep_csv(b));
}

}
