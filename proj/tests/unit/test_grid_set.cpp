#include <doctest.h>

#include <cmath>
#include <sstream>

#include "conewidth/errors.hpp"
#include "conewidth/grid_set.hpp"

using namespace cw;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

}  // namespace

TEST_SUITE("grid_set") {

TEST_CASE("four corner cantor counts and nesting") {
    for (int k = 0; k <= 3; ++k) {
        int N = 1 << (2 * k);
        if (N < 4) N = 4;
        auto s = four_corner_cantor(k, 0, N);
        Index side = N >> (2 * k);
        CHECK(s.count() == (Index(1) << (2 * k)) * side * side);
    }
    auto a = four_corner_cantor(2, 0, 64);
    auto b = four_corner_cantor(3, 0, 64);
    CHECK(b.subset_of(a));
    CHECK(b.count() * 4 == a.count());
    CHECK(a.is_compactly_interior() == false);
    auto r = four_corner_cantor(2, 8, 128);
    CHECK(r.is_compactly_interior());
    CHECK_THROWS_AS(four_corner_cantor(3, 8, 64), ResolutionError);
}

TEST_CASE("dilation by zero is the identity and by 3h a disc") {
    const int N = 32;
    GridSet s(2, N);
    s.set(s.index({16, 16, 0}));
    CHECK(dilate(s, 0.0) == s);
    auto d = dilate(s, 3.0 / N);
    Index expect = 0;
    for (int i = -5; i <= 5; ++i)
        for (int j = -5; j <= 5; ++j)
            if (i * i + j * j <= 3.5 * 3.5) ++expect;
    CHECK(d.count() == expect);
    for (int i = -5; i <= 5; ++i)
        for (int j = -5; j <= 5; ++j) CHECK(d.test(Coord{16 + i, 16 + j, 0}) == (i * i + j * j <= 12.25));
    auto e = four_corner_cantor(2, 8, 128);
    CHECK(dilate(e, 0.01).subset_of(dilate(e, 0.03)));
    CHECK(dilate(e, 0.03).subset_of(dilate(e, 0.07)));
    CHECK_THROWS_AS(dilate(e, -1.0), DomainError);
}

TEST_CASE("cutoff is one on the set, zero far away, and Lipschitz") {
    const int N = 64;
    const double h = 1.0 / N;
    auto om = axis_box(2, N, {20, 20, 0}, {41, 41, 0});
    const double margin = 10 * h;
    auto psi = build_cutoff(om, margin);
    double worst = 0.0;
    for (Index i = 0; i < om.size(); ++i) {
        auto c = om.coords(i);
        double dx = std::max({20 - c[0], c[0] - 40, 0});
        double dy = std::max({20 - c[1], c[1] - 40, 0});
        double d = std::hypot(dx, dy) * h;
        if (om.test(i)) CHECK(psi.at(i) == 1.0);
        if (d >= margin / 2 + h / 2 + 1e-12) CHECK(psi.at(i) == 0.0);
        CHECK(psi.at(i) >= 0.0);
        CHECK(psi.at(i) <= 1.0);
        if (c[0] + 1 < N) worst = std::max(worst, std::abs(psi.at(i) - psi.at(om.index({c[0] + 1, c[1], 0}))));
        if (c[1] + 1 < N) worst = std::max(worst, std::abs(psi.at(i) - psi.at(om.index({c[0], c[1] + 1, 0}))));
    }
    CHECK(worst <= 2 * h / margin + 1e-12);
    CHECK_THROWS_AS(build_cutoff(om, 2 * h), ResolutionError);
}

TEST_CASE("intersection length") {
    const int N = 64;
    GridSet empty(2, N);
    std::vector<Vec> row{v2(0, 1.0 / 8), v2(1, 1.0 / 8)};
    CHECK(polyline_set_intersection_length(empty, row) == 0.0);
    GridSet full(2, N);
    for (Index i = 0; i < full.size(); ++i) full.set(i);
    std::vector<Vec> diag{v2(0.01, 0.02), v2(0.5, 0.4), v2(0.97, 0.9)};
    double L = (diag[1] - diag[0]).norm() + (diag[2] - diag[1]).norm();
    CHECK(polyline_set_intersection_length(full, diag) == doctest::Approx(L).epsilon(1e-12));
    auto c1 = four_corner_cantor(1, 0, N);
    CHECK(polyline_set_intersection_length(c1, row) == doctest::Approx(0.5).epsilon(1e-12));

    auto a = axis_box(2, N, {0, 0, 0}, {32, 64, 0});
    auto b = full.set_difference(a);
    double la = polyline_set_intersection_length(a, diag);
    double lb = polyline_set_intersection_length(b, diag);
    CHECK(la + lb == doctest::Approx(L).epsilon(1e-12));
    CHECK(polyline_set_intersection_length(a, row) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("text and json round trips") {
    auto s = four_corner_cantor(2, 8, 128);
    std::stringstream ss;
    write_grid_set(ss, s);
    auto back = read_grid_set(ss);
    CHECK(back == s);
    CHECK(back.k0() == s.k0());
    auto j = grid_set_to_json(s);
    CHECK(grid_set_from_json(j) == s);
    std::stringstream bad("2 16 0 X 256");
    CHECK_THROWS_AS(read_grid_set(bad), ArgumentError);
    std::stringstream shortrun("2 16 0 C 10");
    CHECK_THROWS_AS(read_grid_set(shortrun), ArgumentError);
}

TEST_CASE("resource and domain limits") {
    CHECK_THROWS_AS(GridSet(3, 1024), ResourceError);
    CHECK_THROWS_AS(GridSet(4, 8), DomainError);
    CHECK_NOTHROW(GridSet(2, 8192));
}

TEST_CASE("sampled field interpolates linear data exactly") {
    const int N = 16;
    std::vector<double> vals(N * N);
    GridSet g(2, N);
    for (Index i = 0; i < g.size(); ++i) {
        Vec c = g.center(i);
        vals[i] = 2 * c[0] - 3 * c[1];
    }
    SampledField f(2, N, vals);
    Vec x = v2(0.37, 0.61);
    CHECK(f.eval(x) == doctest::Approx(2 * 0.37 - 3 * 0.61).epsilon(1e-12));
    Vec gr = f.gradient(x);
    CHECK(gr[0] == doctest::Approx(2.0));
    CHECK(gr[1] == doctest::Approx(-3.0));
}

TEST_CASE("padding keeps cells and spacing") {
    auto s = four_corner_cantor(1, 0, 16);
    auto p = pad_grid_set(s, 2);
    CHECK(p.N() == 20);
    CHECK(p.count() == s.count());
    CHECK(p.test(Coord{2, 2, 0}));
    CHECK_FALSE(p.test(Coord{0, 0, 0}));
}

}
