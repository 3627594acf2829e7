#pragma once

#include <random>
#include <string>
#include <vector>

#include "conewidth/width.hpp"

namespace cw {

double unit_ball_volume(int n);

// f(x) = A x + b + sum_t c_t sin(<a_t, x> + phi_t) w_t with |w_t| = 1.
class SmoothTestFunction {
public:
    struct Term {
        double c = 0.0;
        Vec a;
        double phase = 0.0;
        Vec w;
    };

    SmoothTestFunction(int n, int m, Mat A, Vec b, std::vector<Term> terms, std::string name);

    int n() const { return n_; }
    int m() const { return m_; }
    const std::string& name() const { return name_; }

    Vec value(const Vec& x) const;
    Mat jacobian(const Vec& x) const;
    // D^2 f(x)[u, w] and D^2 f(x)[u, .] (m x n).
    Vec hessian_apply(const Vec& x, const Vec& u, const Vec& w) const;
    Mat hessian_row(const Vec& x, const Vec& u) const;
    // D^3 f(x)[u, u, .] (m x n).
    Mat third_row(const Vec& x, const Vec& u) const;
    // Frobenius norms of D^2 f(x) and D^3 f(x).
    double hessian_norm(const Vec& x) const;
    double third_norm(const Vec& x) const;

    // Upper bounds over [0,1]^n.
    double sup_f() const { return sup_f_; }
    double sup_df() const { return sup_df_; }
    double sup_d2f() const { return sup_d2f_; }
    double sup_d3f() const { return sup_d3f_; }

private:
    int n_, m_;
    Mat A_;
    Vec b_;
    std::vector<Term> terms_;
    std::string name_;
    double sup_f_ = 0, sup_df_ = 0, sup_d2f_ = 0, sup_d3f_ = 0;
};

std::vector<std::string> smooth_catalog_names();
SmoothTestFunction smooth_catalog(const std::string& name, int n, int m, unsigned long long seed = 1);

struct RoughingParams {
    double eta = 0.04;
    double eps = 0.5;
    double sigma = 0.01;
    double lambda = 0.5;
    std::vector<Direction> basis;  // defaults to the coordinate axes
    Direction v;
    Vec u;
    int radius = 8;
    double delta0 = 0.25;
    // 1 means the theorem budget; larger values scale the budget up and
    // replace sub-grid scales by the floors below.
    double relax = 1.0;
    double delta_floor_cells = 3.0;
    double theta_floor_cells = 1.5;
};

struct BudgetCheck {
    double sum = 0.0;
    double bound = 0.0;
    double relax = 1.0;
    std::vector<double> terms;
    bool ok = false;
};

BudgetCheck budget_check(int n, double d2f, double d3f, double eta, double sum, double relax = 1.0);

// Largest delta on the halving ladder with width(B_delta(E)) < eps.
double calibrate_delta(const GridSet& E, const Direction& e, double sigma, double eps, int radius,
                       double delta0 = 0.25);

struct RoughingCalibration {
    std::vector<double> delta_i;
    double delta_E = 0.0;
    double theta = 0.0;
    double h_star = 0.0;
    double width_theta = 0.0;  // width along v of B_theta(E)
    bool outside_theorem = false;
    BudgetCheck budget;
    std::vector<std::string> notes;
};

class RoughenedFunction {
public:
    RoughenedFunction(const SmoothTestFunction& f, RoughingParams p, RoughingCalibration cal,
                      std::vector<SampledField> G, SampledField H);

    const SmoothTestFunction& base() const { return f_; }
    const RoughingParams& params() const { return p_; }
    const RoughingCalibration& calibration() const { return cal_; }
    const std::vector<SampledField>& G() const { return G_; }
    const SampledField& H() const { return H_; }

    Vec G_at(const Vec& x) const;
    Mat DG_at(const Vec& x) const;
    Vec eval(const Vec& x) const;
    Mat jacobian(const Vec& x) const;

private:
    SmoothTestFunction f_;
    RoughingParams p_;
    RoughingCalibration cal_;
    std::vector<SampledField> G_;
    SampledField H_;
};

// Builds G (from the width functions of B_delta_E(E)) and H, then F.
// Throws ParameterError when the budget fails in strict mode.
RoughenedFunction rough(const SmoothTestFunction& f, const GridSet& E, RoughingParams p);

struct GBoundReport {
    double sup_norm = 0.0;
    double sup_bound = 0.0;
    double worst_quotient = 0.0;
    double quotient_bound = 0.0;
    std::size_t checks = 0;
    std::size_t failures = 0;
    bool ok() const { return sup_norm <= sup_bound && failures == 0; }
};

GBoundReport check_G_bounds(const RoughenedFunction& F, const GridSet& E, int directions = 16);

struct QuotientTrace {
    Index node = -1;
    std::vector<double> h;
    std::vector<Vec> quotient;
    std::vector<double> deviation;
};

struct QuotientReport {
    std::size_t nodes = 0;
    std::size_t passing = 0;
    std::size_t excluded = 0;
    double bound = 0.0;
    double worst = 0.0;
    Index worst_node = -1;
    QuotientTrace worst_trace;
    double fraction() const { return nodes ? double(passing) / nodes : 1.0; }
    std::string trace_csv() const;
};

QuotientReport verify_quotients(const RoughenedFunction& F, const GridSet& E, int h_samples = 5);

struct SupNormReport {
    double max_distance = 0.0;
    double bound = 0.0;
    double sup_H = 0.0;
    double sup_G = 0.0;
    bool ok() const { return max_distance <= bound; }
};

SupNormReport check_sup_norm(const RoughenedFunction& F, int N);

struct GradientReport {
    std::size_t samples = 0;
    std::size_t failures = 0;
    double worst = 0.0;
    double bound = 0.0;
    Vec worst_point;
};

GradientReport check_gradient(const RoughenedFunction& F, std::size_t samples, unsigned long long seed);

}  // namespace cw
