#include <doctest.h>

#include <cmath>
#include <random>

#include "conewidth/errors.hpp"
#include "conewidth/maximal.hpp"
#include "conewidth/pcm.hpp"

using namespace cw;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

}  // namespace

TEST_SUITE("pcm") {

TEST_CASE("identity, tent and rotation evaluate as expected") {
    auto id = pcm_identity(2);
    CHECK((id.eval(v2(0.3, 0.8)) - v2(0.3, 0.8)).norm() < 1e-15);
    auto t = pcm_tent();
    CHECK(t.eval(v1(0.25))[0] == doctest::Approx(0.25));
    CHECK(t.eval(v1(0.5))[0] == doctest::Approx(0.5));
    CHECK(t.eval(v1(0.8))[0] == doctest::Approx(0.2));
    Mat R(2, 2);
    R << 0, -1, 1, 0;
    auto rot = pcm_affine(R, v2(0, 0));
    CHECK((rot.eval(v2(1, 0)) - v2(0, 1)).norm() < 1e-15);
    CHECK(pcm_sup_distance(id, id) == 0.0);
}

TEST_CASE("construction validates isometry and continuity") {
    Mat S(2, 2);
    S << 2, 0, 0, 1;
    CHECK_THROWS_AS(pcm_affine(S, v2(0, 0)), ValidationError);
    auto part = SimplicialPartition(1, {Simplex{{v1(0), v1(0.5)}}, Simplex{{v1(0.5), v1(1)}}});
    AffineCell up{Mat::Identity(1, 1), v1(0)};
    AffineCell jump{Mat::Identity(1, 1), v1(0.1)};
    CHECK_THROWS_AS(PiecewiseCongruentMap(part, {up, jump}), ValidationError);
    CHECK_NOTHROW(PiecewiseCongruentMap(part, {up, up}));
}

TEST_CASE("kuhn triangulation covers the cube") {
    for (int n = 1; n <= 3; ++n) {
        auto k = SimplicialPartition::kuhn(n);
        double vol = 0.0;
        for (const auto& s : k.simplices()) vol += s.volume();
        CHECK(vol == doctest::Approx(1.0).epsilon(1e-12));
        std::mt19937_64 rng(n);
        std::uniform_real_distribution<double> U(0, 1);
        for (int i = 0; i < 100; ++i) {
            Vec x(n);
            for (int d = 0; d < n; ++d) x[d] = U(rng);
            CHECK(k.locate(x) >= 0);
        }
    }
}

TEST_CASE("json round trip") {
    std::mt19937_64 rng(4);
    for (const auto& f : {pcm_catalog("fold_cross"), pcm_random(2, rng), pcm_tent()}) {
        auto g = PiecewiseCongruentMap::from_json(f.to_json());
        CHECK(g.cell_count() == f.cell_count());
        CHECK(pcm_sup_distance(f, g) < 1e-15);
    }
}

TEST_CASE("Xi is empty for affine maps and sits at the tent crease") {
    auto id = pcm_identity(2);
    auto xi = xi_set(id, Direction::axis(2, 0), 0.08, 64);
    CHECK(xi.marked.empty());
    auto rot = pcm_catalog("rotation2");
    CHECK(xi_set(rot, Direction::axis(2, 1), 0.08, 64).marked.empty());

    const int N = 256;
    auto t = xi_set(pcm_tent(), Direction::axis(1, 0), 0.08, N);
    REQUIRE(!t.marked.empty());
    for (Index i = 0; i < t.marked.size(); ++i)
        if (t.marked.test(i)) CHECK(std::abs(t.marked.center(i)[0] - 0.5) <= 1.0 / N);
    auto raster = null_face_raster(pcm_tent().partition(), Cone(Direction::axis(1, 0), 0.0016), N,
                                   (1.0 + 1e-9) / N);
    CHECK(t.marked.subset_of(raster));
}

TEST_CASE("divergence set is empty for g = f and stable otherwise") {
    auto f = pcm_catalog("fold_diagonal");
    auto e = Direction::axis(2, 0);
    auto same = divergence_set(f, f, e, 0.01, 9, 32);
    CHECK(same.marked.empty());
    Mat R(2, 2);
    R << std::cos(0.2), -std::sin(0.2), std::sin(0.2), std::cos(0.2);
    auto g = pcm_postcompose(f, R, v2(0.01, 0));
    auto rep = divergence_set(f, g, e, 0.01, 9, 32);
    CHECK(!rep.marked.empty());
    auto st = quotient_stability(f, g, rep, e, 0.01, 4, 9);
    CHECK(st.failures == 0);
    CHECK(st.pairs > 0);
    auto inset = restrict_to_inset(rep.marked, 4.0 / 9);
    CHECK(inset.subset_of(rep.marked));
    CHECK(divergence_diameter_budget(2, 4, 0.01, 0.01) > 0.0);
}

}

TEST_SUITE("maximal") {

namespace {

double brute_maximal(const StepSignal& s, double t) {
    std::vector<double> pts = s.breaks;
    pts.push_back(t);
    double best = 0.0;
    for (double a : pts)
        for (double b : pts) {
            if (!(a <= t && t <= b && a < b)) continue;
            double integral = 0.0;
            for (std::size_t k = 0; k < s.values.size(); ++k) {
                double lo = std::max(a, s.breaks[k]), hi = std::min(b, s.breaks[k + 1]);
                if (hi > lo) integral += s.values[k] * (hi - lo);
            }
            best = std::max(best, integral / (b - a));
        }
    return best;
}

StepSignal random_signal(std::mt19937_64& rng, int pieces) {
    std::uniform_real_distribution<double> U(0, 1);
    StepSignal s;
    s.breaks.push_back(0.0);
    for (int k = 0; k < pieces; ++k) {
        s.breaks.push_back(s.breaks.back() + 0.05 + U(rng));
        s.values.push_back(U(rng) < 0.3 ? 0.0 : U(rng) * 3);
    }
    return s;
}

}  // namespace

TEST_CASE("maximal function agrees with brute force") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> U(0, 1);
    for (int trial = 0; trial < 20; ++trial) {
        auto s = random_signal(rng, 1 + trial % 12);
        for (int q = 0; q < 15; ++q) {
            double t = s.breaks.front() + U(rng) * (s.breaks.back() - s.breaks.front());
            double ref = brute_maximal(s, t);
            CHECK(std::abs(maximal_at(s, t) - ref) <= 1e-12 * std::max(1.0, ref));
        }
    }
}

TEST_CASE("Lp power of the maximal function by quadrature") {
    std::mt19937_64 rng(8);
    for (double p : {2.0, 5.0}) {
        auto s = random_signal(rng, 6);
        const int M = 20000;
        double a = s.breaks.front(), b = s.breaks.back(), sum = 0.0;
        for (int i = 0; i < M; ++i) sum += std::pow(maximal_at(s, a + (b - a) * (i + 0.5) / M), p);
        sum *= (b - a) / M;
        double exact = maximal_lp_pow(s, p);
        CHECK(std::abs(sum - exact) <= 2e-3 * exact);
        CHECK(exact <= maximal_constant_pow(p) * s.lp_pow(p));
        CHECK(exact >= s.lp_pow(p) * (1 - 1e-12));
    }
}

TEST_CASE("identical maps give a zero difference signal") {
    auto f = pcm_catalog("fold_cross");
    Cone c(Direction::axis(2, 0), 0.1);
    ConeCurve k({v2(0.1, 0.3), v2(0.5, 0.4), v2(0.9, 0.35)}, c);
    auto cc = canonicalize(k, c);
    auto sig = difference_speed(f, f, cc);
    CHECK(sig.sup() == 0.0);
    auto r = curve_maximal_bound(f, f, cc, 5.0, 0.0);
    CHECK(r.lhs == 0.0);
    CHECK(r.holds());
}

TEST_CASE("invalid step signals are rejected") {
    StepSignal s{{0.0, 1.0, 0.5}, {1.0, 2.0}};
    CHECK_THROWS(s.validate());
    StepSignal t{{0.0, 1.0}, {-1.0}};
    CHECK_THROWS(t.validate());
}

}
