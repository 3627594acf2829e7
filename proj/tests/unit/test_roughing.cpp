#include <doctest.h>

#include <cmath>
#include <random>

#include "conewidth/errors.hpp"
#include "conewidth/roughing.hpp"

using namespace cw;

namespace {

Vec random_point(int n, std::mt19937_64& rng, double lo = 0.05, double hi = 0.95) {
    std::uniform_real_distribution<double> U(lo, hi);
    Vec x(n);
    for (int d = 0; d < n; ++d) x[d] = U(rng);
    return x;
}

Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double t) {
    Vec f0 = f(x);
    Mat J(f0.size(), x.size());
    for (int d = 0; d < x.size(); ++d) {
        Vec a = x, b = x;
        a[d] += t;
        b[d] -= t;
        J.col(d) = (f(a) - f(b)) / (2 * t);
    }
    return J;
}

RoughingParams relaxed_params(int n) {
    RoughingParams p;
    p.eta = 0.045;
    p.eps = 0.5;
    p.sigma = 0.01;
    p.lambda = 0.9;
    p.v = Direction::axis(n, 0);
    p.u = Vec::Unit(n, 0);
    p.radius = 8;
    p.relax = 1e12;
    p.delta_floor_cells = 9;
    return p;
}

}  // namespace

TEST_SUITE("roughing") {

TEST_CASE("unit ball volumes") {
    CHECK(unit_ball_volume(1) == doctest::Approx(2.0));
    CHECK(unit_ball_volume(2) == doctest::Approx(M_PI));
    CHECK(unit_ball_volume(3) == doctest::Approx(4.0 * M_PI / 3.0));
}

TEST_CASE("smooth catalog derivatives match finite differences") {
    std::mt19937_64 rng(2);
    for (const auto& name : smooth_catalog_names()) {
        for (int n : {2, 3}) {
            auto f = smooth_catalog(name, n, n, 5);
            CHECK(f.sup_df() <= 1.0 + 1e-12);
            for (int i = 0; i < 125; ++i) {
                Vec x = random_point(n, rng);
                Vec u = random_point(n, rng, -1, 1).normalized();
                Vec w = random_point(n, rng, -1, 1);
                auto val = [&](const Vec& y) { return f.value(y); };
                Mat J = f.jacobian(x);
                CHECK((J - fd_jacobian(val, x, 1e-5)).norm() <= 1e-8);
                Eigen::JacobiSVD<Mat> svd(J);
                CHECK(svd.singularValues()[0] <= f.sup_df() + 1e-12);
                const double t = 1e-4;
                Mat Jp = f.jacobian(x + t * u), Jm = f.jacobian(x - t * u);
                Mat H = f.hessian_row(x, u);
                CHECK((H - (Jp - Jm) / (2 * t)).norm() <= 1e-6);
                CHECK((f.hessian_apply(x, u, w) - H * w).norm() <= 1e-12);
                Mat T3 = f.third_row(x, u);
                CHECK((T3 - (Jp - 2 * J + Jm) / (t * t)).norm() <= 1e-4);
                CHECK(f.hessian_norm(x) <= f.sup_d2f() + 1e-12);
                CHECK(f.third_norm(x) <= f.sup_d3f() + 1e-12);
            }
        }
    }
}

TEST_CASE("budget predicate") {
    const int n = 2;
    const double eta = 0.04, d2 = 0.3, d3 = 0.7;
    double t1 = eta * eta / (1024.0 * std::pow(3.0, 4));
    double t2 = eta / (1048576.0 * M_PI);
    double t3 = eta / (1024.0 * 2 * d2);
    double t4 = std::sqrt(eta) / (1024.0 * 2 * (1 + d3));
    double bound = std::min({t1, t2, t3, t4});
    auto b = budget_check(n, d2, d3, eta, 0.5 * bound);
    CHECK(b.bound == doctest::Approx(bound).epsilon(1e-14));
    CHECK(b.ok);
    CHECK_FALSE(budget_check(n, d2, d3, eta, bound).ok);
    CHECK(budget_check(n, d2, d3, eta, 2 * bound, 4.0).ok);
    auto z = budget_check(n, 0.0, 0.0, eta, 0.1 * bound);
    CHECK(std::isfinite(z.bound));
}

TEST_CASE("strict mode refuses parameters outside the budget") {
    auto f = smooth_catalog("zero", 2, 2);
    auto E = four_corner_cantor(2, 8, 64);
    RoughingParams p = relaxed_params(2);
    p.relax = 1.0;
    CHECK_THROWS_AS(rough(f, E, p), ParameterError);
    p.eta = 0.2;
    CHECK_THROWS_AS(rough(f, E, p), DomainError);
}

TEST_CASE("empty set gives the scaled function") {
    auto f = smooth_catalog("sine", 2, 2, 3);
    GridSet E(2, 64);
    auto F = rough(f, E, relaxed_params(2));
    CHECK(F.calibration().outside_theorem);
    for (const auto& g : F.G()) CHECK(g.max_abs() == 0.0);
    CHECK(F.H().max_abs() == 0.0);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 20; ++i) {
        Vec x = random_point(2, rng);
        CHECK((F.eval(x) - (1 - 0.045) * f.value(x)).norm() <= 1e-15);
    }
}

TEST_CASE("roughened map on a cantor set") {
    auto f = smooth_catalog("isometry", 2, 2, 4);
    auto E = four_corner_cantor(2, 8, 64);
    auto F = rough(f, E, relaxed_params(2));
    const auto& cal = F.calibration();
    CHECK(cal.delta_E >= 9.0 / 64);
    CHECK(cal.h_star > 0.0);
    const double b = beta(0.01);
    const double h = E.h();
    double hmax = 0.0;
    for (double x : F.H().values()) {
        CHECK(x >= 0.0);
        hmax = std::max(hmax, x);
    }
    CHECK(hmax <= std::sqrt(2.0) + grid_tolerance(h, 0.01));
    for (const auto& g : F.G()) {
        for (double x : g.values()) {
            CHECK(x >= 0.0);
        }
    }
    std::mt19937_64 rng(9);
    for (int i = 0; i < 30; ++i) {
        Vec x = random_point(2, rng, 0.1, 0.9);
        auto ev = [&](const Vec& y) { return F.eval(y); };
        Mat J = F.jacobian(x);
        CHECK((J - fd_jacobian(ev, x, 1e-8)).norm() <= 1e-4 * (1 + J.norm()));
    }
    auto sup = check_sup_norm(F, 64);
    CHECK(sup.max_distance >= 0.0);
    auto gb = check_G_bounds(F, E, 8);
    CHECK(gb.checks > 0);
}

}
