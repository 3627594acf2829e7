#include "conewidth/roughing.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "conewidth/errors.hpp"
#include "conewidth/format.hpp"

namespace cw {

double unit_ball_volume(int n) { return std::pow(M_PI, n / 2.0) / std::tgamma(n / 2.0 + 1.0); }

SmoothTestFunction::SmoothTestFunction(int n, int m, Mat A, Vec b, std::vector<Term> terms, std::string name)
    : n_(n), m_(m), A_(std::move(A)), b_(std::move(b)), terms_(std::move(terms)), name_(std::move(name)) {
    if (A_.rows() != m || A_.cols() != n || b_.size() != m) throw ValidationError("smooth function: shape mismatch");
    for (auto& t : terms_) {
        if (t.a.size() != n || t.w.size() != m) throw ValidationError("smooth function: term shape mismatch");
        t.w.normalize();
    }
    double lin = 0.0;
    GridSet corners(n, 2);
    for (Index i = 0; i < corners.size(); ++i) {
        Coord c = corners.coords(i);
        Vec x(n);
        for (int d = 0; d < n; ++d) x[d] = c[d];
        lin = std::max(lin, (A_ * x + b_).norm());
    }
    double opA = A_.size() ? Eigen::JacobiSVD<Mat>(A_).singularValues()(0) : 0.0;
    sup_f_ = lin;
    sup_df_ = opA;
    for (const auto& t : terms_) {
        double c = std::abs(t.c), a = t.a.norm();
        sup_f_ += c;
        sup_df_ += c * a;
        sup_d2f_ += c * a * a;
        sup_d3f_ += c * a * a * a;
    }
}

Vec SmoothTestFunction::value(const Vec& x) const {
    Vec y = A_ * x + b_;
    for (const auto& t : terms_) y += t.c * std::sin(t.a.dot(x) + t.phase) * t.w;
    return y;
}

Mat SmoothTestFunction::jacobian(const Vec& x) const {
    Mat J = A_;
    for (const auto& t : terms_) J += t.c * std::cos(t.a.dot(x) + t.phase) * t.w * t.a.transpose();
    return J;
}

Vec SmoothTestFunction::hessian_apply(const Vec& x, const Vec& u, const Vec& w) const {
    Vec y = Vec::Zero(m_);
    for (const auto& t : terms_) y -= t.c * std::sin(t.a.dot(x) + t.phase) * t.a.dot(u) * t.a.dot(w) * t.w;
    return y;
}

Mat SmoothTestFunction::hessian_row(const Vec& x, const Vec& u) const {
    Mat M = Mat::Zero(m_, n_);
    for (const auto& t : terms_) M -= t.c * std::sin(t.a.dot(x) + t.phase) * t.a.dot(u) * t.w * t.a.transpose();
    return M;
}

Mat SmoothTestFunction::third_row(const Vec& x, const Vec& u) const {
    Mat M = Mat::Zero(m_, n_);
    for (const auto& t : terms_) {
        double au = t.a.dot(u);
        M -= t.c * std::cos(t.a.dot(x) + t.phase) * au * au * t.w * t.a.transpose();
    }
    return M;
}

double SmoothTestFunction::hessian_norm(const Vec& x) const {
    // Frobenius norm of the m x n x n tensor.
    std::vector<Mat> H(static_cast<std::size_t>(m_), Mat::Zero(n_, n_));
    for (const auto& t : terms_) {
        double s = -t.c * std::sin(t.a.dot(x) + t.phase);
        for (int k = 0; k < m_; ++k) H[static_cast<std::size_t>(k)] += s * t.w[k] * t.a * t.a.transpose();
    }
    double acc = 0.0;
    for (const auto& M : H) acc += M.squaredNorm();
    return std::sqrt(acc);
}

double SmoothTestFunction::third_norm(const Vec& x) const {
    double acc = 0.0;
    const int n = n_;
    std::vector<double> T(static_cast<std::size_t>(m_ * n * n * n), 0.0);
    for (const auto& t : terms_) {
        double s = -t.c * std::cos(t.a.dot(x) + t.phase);
        for (int k = 0; k < m_; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    for (int l = 0; l < n; ++l)
                        T[static_cast<std::size_t>(((k * n + i) * n + j) * n + l)] += s * t.w[k] * t.a[i] * t.a[j] * t.a[l];
    }
    for (double v : T) acc += v * v;
    return std::sqrt(acc);
}

std::vector<std::string> smooth_catalog_names() { return {"zero", "isometry", "sine", "mixed"}; }

namespace {
Mat orthonormal_columns(int m, int n, std::mt19937_64& rng) {
    std::normal_distribution<double> G(0.0, 1.0);
    if (m >= n) {
        Mat M(m, n);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < n; ++c) M(r, c) = G(rng);
        Mat Q = M.householderQr().householderQ() * Mat::Identity(m, n);
        return Q;
    }
    Mat M(n, m);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < m; ++c) M(r, c) = G(rng);
    Mat Q = M.householderQr().householderQ() * Mat::Identity(n, m);
    return Q.transpose();
}

std::vector<SmoothTestFunction::Term> sine_terms(int n, int m, std::mt19937_64& rng, double lip) {
    std::normal_distribution<double> G(0.0, 1.0);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<SmoothTestFunction::Term> terms(3);
    double total = 0.0;
    for (auto& t : terms) {
        t.a = Vec(n);
        for (int d = 0; d < n; ++d) t.a[d] = G(rng);
        t.a *= (2.0 + 4.0 * U(rng)) / t.a.norm();
        t.w = Vec(m);
        for (int d = 0; d < m; ++d) t.w[d] = G(rng);
        t.w.normalize();
        t.phase = 2.0 * M_PI * U(rng);
        t.c = 0.5 + U(rng);
        total += t.c * t.a.norm();
    }
    for (auto& t : terms) t.c *= lip / total;
    return terms;
}
}  // namespace

SmoothTestFunction smooth_catalog(const std::string& name, int n, int m, unsigned long long seed) {
    std::mt19937_64 rng(seed);
    if (name == "zero") return SmoothTestFunction(n, m, Mat::Zero(m, n), Vec::Zero(m), {}, name);
    if (name == "isometry") {
        std::uniform_real_distribution<double> U(-0.5, 0.5);
        Vec b(m);
        for (int d = 0; d < m; ++d) b[d] = U(rng);
        return SmoothTestFunction(n, m, orthonormal_columns(m, n, rng), b, {}, name);
    }
    if (name == "sine") return SmoothTestFunction(n, m, Mat::Zero(m, n), Vec::Zero(m), sine_terms(n, m, rng, 0.9), name);
    if (name == "mixed") {
        Mat A = 0.5 * orthonormal_columns(m, n, rng);
        return SmoothTestFunction(n, m, A, Vec::Zero(m), sine_terms(n, m, rng, 0.45), name);
    }
    throw ArgumentError("smooth catalog: unknown entry " + name);
}

BudgetCheck budget_check(int n, double d2f, double d3f, double eta, double sum, double relax) {
    BudgetCheck b;
    b.sum = sum;
    b.relax = relax;
    const double inf = std::numeric_limits<double>::infinity();
    b.terms = {eta * eta / (1024.0 * std::pow(n + 1.0, 4)), eta / (std::ldexp(1.0, 20) * unit_ball_volume(n)),
               d2f > 0 ? eta / (1024.0 * n * d2f) : inf, std::sqrt(eta) / (1024.0 * n * (1.0 + d3f))};
    b.bound = *std::min_element(b.terms.begin(), b.terms.end());
    b.ok = sum < relax * b.bound;
    return b;
}

double calibrate_delta(const GridSet& E, const Direction& e, double sigma, double eps, int radius, double delta0) {
    ConeGraph g(E.dim(), E.N(), Cone(e, sigma), radius);
    const double h = E.h();
    double best_w = 0.0;
    for (double delta = delta0; delta >= 2.0 * h * (1.0 - 1e-12); delta *= 0.5) {
        GridSet om = dilate(E, delta);
        best_w = longest_path(g, om).value;
        if (best_w < eps) return delta;
    }
    throw ResolutionError("calibrate: width stays at " + fmt_double(best_w) + " >= eps = " + fmt_double(eps) +
                          " down to two cells");
}

RoughenedFunction::RoughenedFunction(const SmoothTestFunction& f, RoughingParams p, RoughingCalibration cal,
                                     std::vector<SampledField> G, SampledField H)
    : f_(f), p_(std::move(p)), cal_(std::move(cal)), G_(std::move(G)), H_(std::move(H)) {}

Vec RoughenedFunction::G_at(const Vec& x) const {
    Vec g(static_cast<Index>(G_.size()));
    for (std::size_t i = 0; i < G_.size(); ++i) g[static_cast<Index>(i)] = G_[i].eval(x);
    return g;
}

Mat RoughenedFunction::DG_at(const Vec& x) const {
    Mat D(static_cast<Index>(G_.size()), f_.n());
    for (std::size_t i = 0; i < G_.size(); ++i) D.row(static_cast<Index>(i)) = G_[i].gradient(x).transpose();
    return D;
}

Vec RoughenedFunction::eval(const Vec& x) const {
    Vec g = G_at(x);
    Vec y = f_.value(x) - f_.jacobian(x) * g + 0.5 * f_.hessian_apply(x, g, g) + H_.eval(x) * p_.u;
    return (1.0 - p_.eta) * y;
}

Mat RoughenedFunction::jacobian(const Vec& x) const {
    Vec g = G_at(x);
    Mat DG = DG_at(x);
    Mat Df = f_.jacobian(x);
    Mat H2 = f_.hessian_row(x, g);
    Mat J = Df - H2 - Df * DG + 0.5 * f_.third_row(x, g) + H2 * DG + p_.u * H_.gradient(x).transpose();
    return (1.0 - p_.eta) * J;
}

namespace {
double taylor_ratio(const SmoothTestFunction& f, const Vec& x, const Vec& hv, double h, bool second) {
    if (!second) {
        Vec r = f.value(x + hv) - f.value(x) - f.jacobian(x) * hv - 0.5 * f.hessian_apply(x, hv, hv);
        return r.norm() / std::abs(h);
    }
    Mat R = f.jacobian(x + hv) - f.jacobian(x) - f.hessian_row(x, hv);
    // D^2 f(x + hv) - D^2 f(x) - D^3 f(x)[hv], Frobenius norm bounded by sampling
    // the bilinear form against basis pairs.
    double acc = 0.0;
    const int n = f.n();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Vec ei = Vec::Unit(n, i), ej = Vec::Unit(n, j);
            Vec d = f.hessian_apply(x + hv, ei, ej) - f.hessian_apply(x, ei, ej);
            // D^3 f(x)[hv, ei, ej] via a symmetric difference of third rows.
            Mat T1 = f.third_row(x, hv + ei);
            Mat T2 = f.third_row(x, hv - ei);
            Vec t = 0.25 * (T1 - T2) * ej;
            acc += (d - t).squaredNorm();
        }
    return (R.norm() + std::sqrt(acc)) / std::abs(h);
}

double estimate_h_star(const SmoothTestFunction& f, const GridSet& E, const Direction& v, double eta, double cap) {
    const int n = f.n();
    std::vector<Vec> pts;
    GridSet lattice(n, 9);
    for (Index i = 0; i < lattice.size(); ++i) pts.push_back(lattice.center(i));
    Index stride = std::max<Index>(1, E.count() / 64);
    Index seen = 0;
    for (Index i = 0; i < E.size(); ++i)
        if (E.test(i) && (seen++ % stride) == 0) pts.push_back(E.center(i));
    double h = 1.0;
    while (h >= cap) h *= 0.5;
    for (; h > 1e-9; h *= 0.5) {
        bool ok = true;
        for (const auto& x : pts) {
            for (double s : {h, -h, 2 * h, -2 * h}) {
                Vec hv = s * v.vec();
                if (taylor_ratio(f, x, hv, s, false) >= eta || taylor_ratio(f, x, hv, s, true) > 1.0) {
                    ok = false;
                    break;
                }
            }
            if (!ok) break;
        }
        if (ok) return h;
    }
    throw ResolutionError("roughing: no admissible h* on the dyadic ladder");
}
}  // namespace

RoughenedFunction rough(const SmoothTestFunction& f, const GridSet& E, RoughingParams p) {
    const int n = f.n();
    if (E.dim() != n) throw ArgumentError("rough: set and function dimensions differ");
    if (!(p.eta > 0.0 && p.eta < 0.05)) throw DomainError("rough: eta must lie in (0, 1/20)");
    if (!(p.eps > 0 && p.sigma > 0 && p.sigma < 1 && p.lambda > 0)) throw DomainError("rough: eps, sigma, lambda must be positive");
    if (p.basis.empty())
        for (int i = 0; i < n; ++i) p.basis.push_back(Direction::axis(n, i));
    if (static_cast<int>(p.basis.size()) != n) throw ArgumentError("rough: basis must have n directions");
    if (p.v.dim() != n) throw ArgumentError("rough: v has the wrong dimension");
    if (p.u.size() != f.m() || p.u.norm() == 0.0) throw ArgumentError("rough: u has the wrong dimension");
    p.u.normalize();
    if (!(p.relax >= 1.0)) throw DomainError("rough: relax factor must be at least 1");

    RoughingCalibration cal;
    const double h = E.h();
    const double b = beta(p.sigma);
    cal.budget = budget_check(n, f.sup_d2f(), f.sup_d3f(), p.eta, p.sigma + p.eps + p.lambda, p.relax);
    cal.outside_theorem = p.relax > 1.0;
    if (!cal.budget.ok)
        throw ParameterError("rough: sigma + eps + lambda = " + fmt_double(cal.budget.sum) +
                             " exceeds the budget " + fmt_double(cal.budget.relax * cal.budget.bound));

    for (const auto& e : p.basis) cal.delta_i.push_back(calibrate_delta(E, e, p.sigma, p.eps, p.radius, p.delta0));
    double dmin = *std::min_element(cal.delta_i.begin(), cal.delta_i.end());
    cal.delta_E = std::min(dmin, p.eps) / 16.0;
    if (cal.outside_theorem && cal.delta_E < p.delta_floor_cells * h) {
        cal.notes.push_back("delta_E raised from " + fmt_double(cal.delta_E) + " to the grid floor");
        cal.delta_E = p.delta_floor_cells * h;
    }
    if (!(cal.delta_E > 2.0 * h)) throw ResolutionError("rough: delta_E = " + fmt_double(cal.delta_E) + " is below two cells");

    ConeGraph gv(n, E.N(), Cone(p.v, p.sigma), p.radius);
    const double target = p.lambda * cal.delta_E / 2.0;
    if (!cal.outside_theorem) {
        bool found = false;
        for (double th = target * (1.0 - 1e-9); th >= 0.25 * h; th *= 0.5) {
            double w = longest_path(gv, dilate(E, th)).value;
            if (w <= target) {
                cal.theta = th;
                cal.width_theta = w;
                found = true;
                break;
            }
        }
        if (!found) throw ResolutionError("rough: no theta above the grid floor keeps the width below lambda delta_E / 2");
    } else {
        cal.theta = p.theta_floor_cells * h;
        cal.width_theta = longest_path(gv, dilate(E, cal.theta)).value;
        if (cal.width_theta > target)
            cal.notes.push_back("width of B_theta(E) along v is " + fmt_double(cal.width_theta) +
                                ", above lambda delta_E / 2 = " + fmt_double(target));
    }

    cal.h_star = estimate_h_star(f, E, p.v, p.eta, std::min(p.eta, cal.theta / 2.0));

    std::vector<SampledField> G;
    GridSet omega = dilate(E, cal.delta_E);
    for (const auto& e : p.basis) {
        SampledField w = width_function(omega, Cone(e, p.sigma), p.radius);
        for (double& x : w.values()) x /= 1.0 + b;
        G.push_back(std::move(w));
    }
    GridSet om_theta = dilate(E, cal.theta);
    SampledField psi = build_cutoff(om_theta, cal.delta_E);
    SampledField wv = width_function(om_theta, gv);
    std::vector<double> hv(wv.values().size());
    for (std::size_t i = 0; i < hv.size(); ++i) hv[i] = psi.values()[i] * wv.values()[i] / (1.0 + b);
    return RoughenedFunction(f, std::move(p), std::move(cal), std::move(G), SampledField(n, E.N(), std::move(hv)));
}

namespace {
std::vector<Vec> probe_directions(int n, int count) {
    std::vector<Vec> out;
    if (n == 2) {
        for (int k = 0; k < count; ++k) {
            double a = 2.0 * M_PI * k / count;
            Vec v(2);
            v << std::cos(a), std::sin(a);
            out.push_back(v);
        }
        return out;
    }
    for (const auto& d : sweep_directions(n, count)) out.push_back(d.vec());
    return out;
}

bool in_node_hull(const Vec& y, double h) {
    for (int d = 0; d < y.size(); ++d)
        if (y[d] < 0.5 * h || y[d] > 1.0 - 0.5 * h) return false;
    return true;
}
}  // namespace

GBoundReport check_G_bounds(const RoughenedFunction& F, const GridSet& E, int directions) {
    const int n = E.dim();
    const double h = E.h();
    const double b = beta(F.params().sigma);
    const double tol = 3.0 * h * (1.0 + b);
    GBoundReport r;
    r.sup_bound = std::sqrt(double(n)) * F.params().eps / (1.0 + b) + tol;
    for (Index i = 0; i < E.size(); ++i) {
        double s = 0.0;
        for (const auto& g : F.G()) s += g.at(i) * g.at(i);
        r.sup_norm = std::max(r.sup_norm, std::sqrt(s));
    }
    r.quotient_bound = 2.0 * std::sqrt(n + 1.0) * b / (1.0 + b);
    auto dirs = probe_directions(n, directions);
    const double dE = F.calibration().delta_E;
    for (Index i = 0; i < E.size(); ++i) {
        if (!E.test(i)) continue;
        Vec x = E.center(i);
        Vec gx = F.G_at(x);
        for (const auto& v : dirs)
            for (double t0 : {2.0 * h, 4.0 * h, 0.5 * dE})
                for (double sg : {1.0, -1.0}) {
                    double t = sg * t0;
                    Vec y = x + t * v;
                    if (!in_node_hull(y, h)) continue;
                    double q = ((F.G_at(y) - gx) / t - v).norm();
                    ++r.checks;
                    double slack = q - r.quotient_bound - tol;
                    r.worst_quotient = std::max(r.worst_quotient, q);
                    if (slack > 0) ++r.failures;
                }
    }
    return r;
}

std::string QuotientReport::trace_csv() const {
    std::ostringstream os;
    const auto& t = worst_trace;
    int m = t.quotient.empty() ? 0 : static_cast<int>(t.quotient[0].size());
    std::vector<std::string> head{"node", "h"};
    for (int k = 0; k < m; ++k) head.push_back("q_" + std::to_string(k));
    head.push_back("deviation");
    os << csv_join(head) << '\n';
    for (std::size_t j = 0; j < t.h.size(); ++j) {
        std::vector<std::string> row{std::to_string(t.node), fmt_double(t.h[j])};
        for (int k = 0; k < m; ++k) row.push_back(fmt_double(t.quotient[j][k]));
        row.push_back(fmt_double(t.deviation[j]));
        os << csv_join(row) << '\n';
    }
    return os.str();
}

QuotientReport verify_quotients(const RoughenedFunction& F, const GridSet& E, int h_samples) {
    QuotientReport r;
    const auto& p = F.params();
    const double hs = F.calibration().h_star;
    const double hgrid = E.h();
    r.bound = 10.0 * p.eta - hs + 3.0 * hgrid * (1.0 + beta(p.sigma));
    std::vector<double> hvals;
    for (int j = 1; j <= h_samples; ++j) {
        double hh = hs * (1.0 + double(j) / (h_samples + 1));
        hvals.push_back(hh);
        hvals.push_back(-hh);
    }
    for (Index i = 0; i < E.size(); ++i) {
        if (!E.test(i)) continue;
        Vec x = E.center(i);
        Vec a = x + 2.0 * hs * p.v.vec(), b2 = x - 2.0 * hs * p.v.vec();
        if ((a.array() < 0).any() || (a.array() > 1).any() || (b2.array() < 0).any() || (b2.array() > 1).any()) {
            ++r.excluded;
            continue;
        }
        ++r.nodes;
        Vec fx = F.eval(x);
        QuotientTrace tr;
        tr.node = i;
        double worst = 0.0;
        for (double hh : hvals) {
            Vec q = (F.eval(x + hh * p.v.vec()) - fx) / hh;
            double dev = (q - p.u).norm();
            tr.h.push_back(hh);
            tr.quotient.push_back(q);
            tr.deviation.push_back(dev);
            worst = std::max(worst, dev);
        }
        if (worst <= r.bound) ++r.passing;
        if (worst > r.worst || r.worst_node < 0) {
            r.worst = worst;
            r.worst_node = i;
            r.worst_trace = std::move(tr);
        }
    }
    return r;
}

SupNormReport check_sup_norm(const RoughenedFunction& F, int N) {
    const auto& f = F.base();
    const auto& p = F.params();
    const int n = f.n();
    SupNormReport r;
    r.bound = p.eta * f.sup_f() +
              (1.0 - p.eta) * (std::sqrt(double(n)) * p.eps + f.sup_d2f() * n * p.eps * p.eps + p.lambda * p.eps);
    r.sup_H = F.H().max_abs();
    GridSet shape(n, N);
    for (Index i = 0; i < shape.size(); ++i) {
        Vec x = shape.center(i);
        r.max_distance = std::max(r.max_distance, (f.value(x) - F.eval(x)).norm());
        r.sup_G = std::max(r.sup_G, F.G_at(x).norm());
    }
    return r;
}

GradientReport check_gradient(const RoughenedFunction& F, std::size_t samples, unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const int n = F.base().n();
    GradientReport r;
    r.bound = 1.0 - F.params().eta * F.params().eta;
    for (std::size_t k = 0; k < samples; ++k) {
        Vec x(n);
        for (int d = 0; d < n; ++d) x[d] = U(rng);
        Mat J = F.jacobian(x);
        double nrm = Eigen::JacobiSVD<Mat>(J).singularValues()(0);
        ++r.samples;
        if (nrm >= r.bound) ++r.failures;
        if (nrm > r.worst) {
            r.worst = nrm;
            r.worst_point = x;
        }
    }
    return r;
}

}  // namespace cw
