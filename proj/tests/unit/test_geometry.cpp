#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "conewidth/errors.hpp"
#include "conewidth/geometry.hpp"

using namespace cw;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

double polyline_length(const std::vector<Vec>& pts) {
    double L = 0.0;
    for (std::size_t k = 1; k < pts.size(); ++k) L += (pts[k] - pts[k - 1]).norm();
    return L;
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("beta values") {
    CHECK(beta(0.5) == doctest::Approx(1.7320508).epsilon(1e-7));
    CHECK(beta(0.1) == doctest::Approx(0.4843221).epsilon(1e-7));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(1e-3, 0.999);
    for (int i = 0; i < 50; ++i) {
        double s = U(rng);
        double b = beta(s);
        CHECK(std::abs((1 + b * b) * (1 - s) * (1 - s) - 1.0) < 1e-11);
    }
    CHECK_THROWS_AS(beta(0.0), DomainError);
    CHECK_THROWS_AS(beta(1.0), DomainError);
}

TEST_CASE("direction normalizes and rejects zero") {
    Direction d(v2(3, 4));
    CHECK(d[0] == doctest::Approx(0.6));
    CHECK(d[1] == doctest::Approx(0.8));
    CHECK_THROWS_AS(Direction(v2(0, 0)), DomainError);
    CHECK_THROWS_AS(Direction(v2(NAN, 1)), DomainError);
}

TEST_CASE("cone membership is strict") {
    Cone c(Direction::axis(2, 0), 0.1);
    CHECK(cone_contains(c, v2(1, 0.3)));
    CHECK_FALSE(cone_contains(c, v2(1, 0.6)));
    CHECK_FALSE(cone_contains(c, v2(-1, 0)));
    CHECK_FALSE(cone_contains(c, v2(0, 0)));
    double b = beta(0.1);
    CHECK_FALSE(cone_contains(c, v2(1, b * (1 + 1e-9))));
    CHECK(cone_contains(c, v2(1, b * (1 - 1e-9))));
}

TEST_CASE("canonicalize straight curves") {
    Cone c(Direction::axis(2, 0), 0.1);
    ConeCurve a({v2(0, 0), v2(1, 0)}, c);
    auto ca = canonicalize(a, c);
    CHECK(ca.T() == doctest::Approx(1.0));
    CHECK(ca.point(0.5)[1] == doctest::Approx(0.0));

    ConeCurve b({v2(0, 0), v2(1, 0.2)}, c);
    auto cb = canonicalize(b, c);
    CHECK(cb.T() == doctest::Approx(1.0));
    for (double s : {0.1, 0.4, 0.9}) CHECK(cb.point(s)[1] == doctest::Approx(0.2 * s));
    CHECK(curve_arc_length(cb) == doctest::Approx(std::sqrt(1.04)).epsilon(1e-12));
}

TEST_CASE("curve violating the cone names the offending pair") {
    Cone c(Direction::axis(2, 0), 0.1);
    try {
        ConeCurve bad({v2(0, 0), v2(0.5, 0.1), v2(0.6, 0.5)}, c);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        std::string msg = e.what();
        CHECK(msg.find('1') != std::string::npos);
        CHECK(msg.find('2') != std::string::npos);
    }
}

TEST_CASE("zigzag at the boundary slope has length T / (1 - sigma)") {
    const double s = 0.1;
    const double b = beta(s) * (1 - 1e-9);
    Cone c(Direction::axis(2, 0), s);
    std::vector<Vec> pts;
    const int K = 10;
    for (int k = 0; k <= K; ++k) pts.push_back(v2(double(k) / K, (k % 2) * b / K));
    ConeCurve z(pts, c);
    double L = curve_arc_length(z);
    CHECK(L == doctest::Approx(polyline_length(pts)).epsilon(1e-12));
    CHECK(std::abs(L - 1.0 / (1 - s)) < 1e-8);
    CHECK(L == doctest::Approx(1.1111).epsilon(1e-4));
}

TEST_CASE("refinement and resampling preserve length") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-0.3, 0.3);
    Cone c(Direction::axis(2, 0), 0.2);
    std::vector<Vec> pts{v2(0.05, 0.5)};
    for (int k = 0; k < 12; ++k) pts.push_back(pts.back() + v2(0.07, 0.07 * U(rng)));
    ConeCurve a(pts, c);
    std::vector<Vec> fine;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        fine.push_back(pts[k]);
        fine.push_back(0.5 * (pts[k] + pts[k + 1]));
    }
    fine.push_back(pts.back());
    ConeCurve b(fine, c);
    CHECK(std::abs(curve_arc_length(a) - curve_arc_length(b)) < 1e-12);

    auto ca = canonicalize(a, c);
    std::vector<Vec> samples;
    const int M = 4000;
    std::vector<double> ts = ca.breaks();
    for (int i = 0; i <= M; ++i) ts.push_back(ca.T() * i / M);
    std::sort(ts.begin(), ts.end());
    for (double t : ts) samples.push_back(ca.point(t));
    double Ls = polyline_length(samples);
    CHECK(std::abs(Ls - curve_arc_length(ca)) < 1e-9);
    CHECK(ca.T() <= std::sqrt(2.0));
}

TEST_CASE("three dimensional canonical curve") {
    Cone c(Direction::axis(3, 2), 0.1);
    Vec a(3), b(3);
    a << 0.5, 0.5, 0.1;
    b << 0.55, 0.52, 0.9;
    ConeCurve k({a, b}, c);
    auto ck = canonicalize(k, c);
    CHECK(ck.T() == doctest::Approx(0.8));
    CHECK(curve_arc_length(ck) == doctest::Approx((b - a).norm()).epsilon(1e-12));
}

TEST_CASE("curve json round trip") {
    Cone c(Direction::axis(2, 0), 0.1);
    ConeCurve a({v2(0, 0), v2(0.3, 0.05), v2(0.9, 0.1)}, c);
    auto back = ConeCurve::from_json(a.to_json(), c);
    REQUIRE(back.vertices().size() == 3);
    for (std::size_t k = 0; k < 3; ++k) CHECK((back.vertices()[k] - a.vertices()[k]).norm() == 0.0);
}

}
