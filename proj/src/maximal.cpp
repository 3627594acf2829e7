#include "conewidth/maximal.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "conewidth/errors.hpp"

namespace cw {

void StepSignal::validate() const {
    if (breaks.size() < 2 || values.size() + 1 != breaks.size()) throw ValidationError("step signal: shape mismatch");
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k)
        if (!(breaks[k + 1] > breaks[k])) throw ValidationError("step signal: breaks must increase");
    for (double v : values)
        if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("step signal: values must be finite and >= 0");
}

double StepSignal::lp_pow(double p) const {
    double s = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) s += std::pow(values[k], p) * (breaks[k + 1] - breaks[k]);
    return s;
}

double StepSignal::sup() const { return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end()); }

namespace {
std::vector<double> prefix(const StepSignal& s) {
    std::vector<double> S(s.breaks.size(), 0.0);
    for (std::size_t k = 0; k < s.values.size(); ++k) S[k + 1] = S[k] + s.values[k] * (s.breaks[k + 1] - s.breaks[k]);
    return S;
}

std::size_t piece_of(const StepSignal& s, double t) {
    auto it = std::upper_bound(s.breaks.begin(), s.breaks.end(), t);
    std::size_t k = static_cast<std::size_t>(it - s.breaks.begin());
    k = k == 0 ? 0 : k - 1;
    return std::min(k, s.values.size() - 1);
}

double primitive(const StepSignal& s, const std::vector<double>& S, double t) {
    std::size_t k = piece_of(s, t);
    return S[k] + s.values[k] * (t - s.breaks[k]);
}

// Integral of (c + kappa / u)^p for u in [u1, u2], u1 > 0.
double hyperbola_pow_integral(double c, double kappa, double u1, double u2, double p) {
    if (!(u2 > u1)) return 0.0;
    double pr = std::round(p);
    if (std::abs(p - pr) < 1e-12 && pr >= 1 && pr <= 64) {
        int P = static_cast<int>(pr);
        double sum = 0.0, binom = 1.0;
        for (int k = 0; k <= P; ++k) {
            double part;
            if (k == 0)
                part = u2 - u1;
            else if (k == 1)
                part = std::log(u2 / u1);
            else
                part = (std::pow(u1, 1 - k) - std::pow(u2, 1 - k)) / (k - 1);
            sum += binom * std::pow(c, P - k) * std::pow(kappa, k) * part;
            binom = binom * (P - k) / (k + 1);
        }
        return sum;
    }
    static const double x[10] = {0.0765265211334973, 0.2277858511416451, 0.3737060887154195, 0.5108670019508271,
                                 0.6360536807265150, 0.7463319064601508, 0.8391169718222188, 0.9122344282513259,
                                 0.9639719272779138, 0.9931285991850949};
    static const double w[10] = {0.1527533871307258, 0.1491729864726037, 0.1420961093183820, 0.1316886384491766,
                                 0.1181945319615184, 0.1019301198172404, 0.0832767415767048, 0.0626720483341091,
                                 0.0406014298003869, 0.0176140071391521};
    // Split geometrically so the integrand is smooth on each part.
    double total = 0.0;
    int parts = std::max(1, static_cast<int>(std::ceil(std::log2(u2 / u1))));
    double ratio = std::pow(u2 / u1, 1.0 / parts);
    double a = u1;
    for (int s = 0; s < parts; ++s) {
        double b = s + 1 == parts ? u2 : a * ratio;
        double m = 0.5 * (a + b), r = 0.5 * (b - a);
        for (int i = 0; i < 10; ++i)
            for (double sg : {-1.0, 1.0}) {
                double u = m + sg * r * x[i];
                total += w[i] * r * std::pow(c + kappa / u, p);
            }
        a = b;
    }
    return total;
}

struct Family {
    double kappa;
    double pole;
    bool right;  // value c + kappa / (pole - t) if right, else c + kappa / (t - pole)
};
}  // namespace

double maximal_at(const StepSignal& s, double t) {
    s.validate();
    if (!(t > s.breaks.front() && t < s.breaks.back())) throw DomainError("maximal: t outside the open interval");
    auto S = prefix(s);
    std::size_t k = piece_of(s, t);
    double best = s.values[k];
    // A break point at t lets J shrink onto either neighbour.
    for (std::size_t i = 1; i + 1 < s.breaks.size(); ++i)
        if (s.breaks[i] == t) best = std::max({best, s.values[i - 1], s.values[i]});
    std::vector<double> left{t}, right{t};
    for (double b : s.breaks) {
        if (b < t) left.push_back(b);
        if (b > t) right.push_back(b);
    }
    double Ft = primitive(s, S, t);
    for (double a : left)
        for (double b : right) {
            if (!(b > a)) continue;
            double Fa = a == t ? Ft : primitive(s, S, a);
            double Fb = b == t ? Ft : primitive(s, S, b);
            best = std::max(best, (Fb - Fa) / (b - a));
        }
    return best;
}

double maximal_lp_pow(const StepSignal& s, double p) {
    s.validate();
    if (!(p > 0.0)) throw DomainError("maximal: p must be positive");
    auto S = prefix(s);
    const std::size_t K = s.values.size();
    const auto& P = s.breaks;
    double total = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        const double c = s.values[k];
        const double t0 = P[k], t1 = P[k + 1];
        double C = c;
        for (std::size_t i = 0; i <= k; ++i)
            for (std::size_t j = k + 1; j <= K; ++j) C = std::max(C, (S[j] - S[i]) / (P[j] - P[i]));
        std::vector<Family> fam;
        for (std::size_t j = k + 2; j <= K; ++j) {
            double kappa = (S[j] - S[k + 1]) - c * (P[j] - P[k + 1]);
            if (kappa > 0) fam.push_back({kappa, P[j], true});
        }
        for (std::size_t i = 0; i + 1 <= k; ++i) {
            double kappa = (S[k] - S[i]) - c * (P[k] - P[i]);
            if (kappa > 0) fam.push_back({kappa, P[i], false});
        }
        // Drop members dominated on the whole piece by another of the same side.
        std::vector<Family> keep;
        for (std::size_t a = 0; a < fam.size(); ++a) {
            bool dominated = false;
            for (std::size_t b = 0; b < fam.size() && !dominated; ++b) {
                if (a == b || fam[a].right != fam[b].right) continue;
                bool closer = fam[a].right ? fam[b].pole <= fam[a].pole : fam[b].pole >= fam[a].pole;
                bool bigger = fam[b].kappa >= fam[a].kappa;
                bool strict = fam[b].pole != fam[a].pole || fam[b].kappa != fam[a].kappa || b < a;
                dominated = closer && bigger && strict;
            }
            // Also drop members never above C on the piece.
            double vmax = fam[a].right ? c + fam[a].kappa / (fam[a].pole - t1) : c + fam[a].kappa / (t0 - fam[a].pole);
            if (!dominated && vmax > C) keep.push_back(fam[a]);
        }
        auto value = [&](const Family& f, double t) {
            return f.right ? c + f.kappa / (f.pole - t) : c + f.kappa / (t - f.pole);
        };
        std::vector<double> cuts{t0, t1};
        auto add = [&](double t) {
            if (t > t0 && t < t1 && std::isfinite(t)) cuts.push_back(t);
        };
        for (std::size_t a = 0; a < keep.size(); ++a) {
            const auto& A = keep[a];
            if (C > c) add(A.right ? A.pole - A.kappa / (C - c) : A.pole + A.kappa / (C - c));
            for (std::size_t b = a + 1; b < keep.size(); ++b) {
                const auto& B = keep[b];
                if (A.right == B.right) {
                    if (A.kappa != B.kappa) add((A.kappa * B.pole - B.kappa * A.pole) / (A.kappa - B.kappa));
                } else {
                    const Family& R = A.right ? A : B;
                    const Family& L = A.right ? B : A;
                    add((L.kappa * R.pole + R.kappa * L.pole) / (R.kappa + L.kappa));
                }
            }
        }
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t q = 0; q + 1 < cuts.size(); ++q) {
            double a = cuts[q], b = cuts[q + 1];
            if (!(b > a)) continue;
            double m = 0.5 * (a + b);
            double vbest = C;
            int arg = -1;
            for (std::size_t f = 0; f < keep.size(); ++f) {
                double v = value(keep[f], m);
                if (v > vbest) {
                    vbest = v;
                    arg = static_cast<int>(f);
                }
            }
            if (arg < 0) {
                total += std::pow(C, p) * (b - a);
            } else {
                const auto& F = keep[static_cast<std::size_t>(arg)];
                if (F.right)
                    total += hyperbola_pow_integral(c, F.kappa, F.pole - b, F.pole - a, p);
                else
                    total += hyperbola_pow_integral(c, F.kappa, a - F.pole, b - F.pole, p);
            }
        }
    }
    return total;
}

double maximal_constant_pow(double p) {
    if (!(p > 1.0)) throw DomainError("maximal: p must exceed 1");
    return 5.0 * p * std::pow(2.0, p - 1.0) / (p - 1.0);
}

namespace {
// Parameter range [lo, hi] within [0,1] of the segment a + t (b - a) inside s.
bool segment_in_simplex(const Simplex& s, const Vec& a, const Vec& b, double& lo, double& hi) {
    Vec la = s.barycentric(a), lb = s.barycentric(b);
    lo = 0.0;
    hi = 1.0;
    for (Index i = 0; i < la.size(); ++i) {
        double u = la[i], v = lb[i] - la[i];
        if (v == 0.0) {
            if (u < 0) return false;
            continue;
        }
        double t = -u / v;
        if (v > 0)
            lo = std::max(lo, t);
        else
            hi = std::min(hi, t);
    }
    return hi > lo;
}
}  // namespace

StepSignal difference_speed(const PiecewiseCongruentMap& f, const PiecewiseCongruentMap& g,
                            const CanonicalCurve& curve) {
    if (f.dim() != g.dim() || f.codim() != g.codim() || f.dim() != curve.dim())
        throw ArgumentError("difference speed: shape mismatch");
    StepSignal out;
    out.breaks.push_back(0.0);
    for (std::size_t k = 0; k + 1 < curve.size(); ++k) {
        double s0 = curve.breaks()[k], s1 = curve.breaks()[k + 1];
        Vec a = curve.vertex(k), b = curve.vertex(k + 1);
        Vec vel = (b - a) / (s1 - s0);
        std::vector<double> cuts{0.0, 1.0};
        for (const auto* m : {&f, &g})
            for (const auto& sx : m->partition().simplices()) {
                double lo, hi;
                if (segment_in_simplex(sx, a, b, lo, hi)) {
                    cuts.push_back(lo);
                    cuts.push_back(hi);
                }
            }
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t q = 0; q + 1 < cuts.size(); ++q) {
            double t0 = cuts[q], t1 = cuts[q + 1];
            if (!(t1 - t0 > 1e-14)) continue;
            Vec mid = a + 0.5 * (t0 + t1) * (b - a);
            int cf = f.partition().locate(mid), cg = g.partition().locate(mid);
            if (cf < 0 || cg < 0) throw DomainError("difference speed: curve leaves the unit cube");
            Vec d = (f.cells()[static_cast<std::size_t>(cf)].A - g.cells()[static_cast<std::size_t>(cg)].A) * vel;
            double sb = s0 + t1 * (s1 - s0);
            if (q + 2 == cuts.size() || t1 == 1.0) sb = s1;
            if (!(sb > out.breaks.back())) continue;
            out.breaks.push_back(sb);
            out.values.push_back(d.norm());
        }
    }
    return out;
}

CurveBoundResult curve_maximal_bound(const PiecewiseCongruentMap& f, const PiecewiseCongruentMap& g,
                                     const CanonicalCurve& curve, double p, double sup_distance) {
    if (!(p > 4.0)) throw DomainError("curve bound: p must exceed 4");
    StepSignal s = difference_speed(f, g, curve);
    CurveBoundResult r;
    r.lhs = maximal_lp_pow(s, p);
    r.sup_distance = sup_distance;
    r.pieces = s.values.size();
    double card = static_cast<double>(f.partition().size());
    r.rhs = std::pow(8.0, p) * std::pow(card, p / 2.0) * f.dim() *
            (std::sqrt(sup_distance) + std::pow(beta(curve.cone().sigma()), p / 2.0));
    return r;
}

DivergenceReport divergence_set(const PiecewiseCongruentMap& f, const PiecewiseCongruentMap& g, const Direction& e,
                                double eps, int k0, int N, int finest_octave) {
    const int n = f.dim();
    if (g.dim() != n || e.dim() != n || f.codim() != g.codim()) throw ArgumentError("divergence: shape mismatch");
    if (k0 < 3) throw DomainError("divergence: k0 must be at least 3");
    if (!(eps > 0)) throw DomainError("divergence: eps must be positive");
    DivergenceReport r;
    r.k0 = k0;
    r.marked = GridSet(n, N, SetRole::Compact, k0);
    r.witness.assign(static_cast<std::size_t>(r.marked.size()), 0.0);
    if (finest_octave < 0) finest_octave = static_cast<int>(std::ceil(std::log2(double(N)))) + 6;
    for (int j = 0; j <= finest_octave; ++j) r.ladder.push_back(std::ldexp(1.0, -j));
    const double lo = 1.0 / (2.0 * k0), hi = 1.0 - lo;
    auto inside = [&](const Vec& y) {
        for (int d = 0; d < n; ++d)
            if (y[d] < lo || y[d] > hi) return false;
        return true;
    };
    for (Index i = 0; i < r.marked.size(); ++i) {
        Vec x = r.marked.center(i);
        if (!inside(x)) continue;
        Vec dx = f.eval(x) - g.eval(x);
        double tmin = 0.0, tmax = 0.0;
        bool any = false;
        for (double t0 : r.ladder)
            for (double sg : {1.0, -1.0}) {
                double t = sg * t0;
                Vec y = x + t * e.vec();
                if (!inside(y)) continue;
                double jump = (f.eval(y) - g.eval(y) - dx).norm();
                if (jump >= eps * t0) {
                    if (!any) {
                        tmin = tmax = t;
                        any = true;
                    } else {
                        tmin = std::min(tmin, t);
                        tmax = std::max(tmax, t);
                    }
                }
            }
        if (!any) continue;
        r.marked.set(i);
        r.witness[static_cast<std::size_t>(i)] = std::abs(tmin) >= std::abs(tmax) ? tmin : tmax;
    }
    return r;
}

GridSet restrict_to_inset(const GridSet& s, double a) {
    GridSet r = s;
    for (Index i = 0; i < s.size(); ++i) {
        if (!s.test(i)) continue;
        Coord c = s.coords(i);
        for (int d = 0; d < s.dim(); ++d) {
            double lo = double(c[d]) / s.N(), hi = double(c[d] + 1) / s.N();
            if (lo < a - 1e-12 || hi > 1.0 - a + 1e-12) r.set(i, false);
        }
    }
    return r;
}

double divergence_diameter_budget(int n, std::size_t card, double eps, double omega) {
    double p = -std::log2(omega);
    double lg = -8.0 * p - 2.0 * std::log2(double(n)) - p * std::log2(double(card)) + 2.0 * p * std::log2(eps) +
                2.0 * std::log2(omega);
    return std::exp2(lg);
}

StabilityResult quotient_stability(const PiecewiseCongruentMap& f, const PiecewiseCongruentMap& g,
                                   const DivergenceReport& rep, const Direction& e, double eps, int samples_per_pair,
                                   unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> G(0.0, 1.0);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const int n = f.dim();
    auto F = [&](const Vec& x) -> Vec { return f.eval(x) - g.eval(x); };
    auto ball = [&](const Vec& c, double r) {
        Vec d(n);
        for (int k = 0; k < n; ++k) d[k] = G(rng);
        d.normalize();
        return Vec(c + r * std::pow(U(rng), 1.0 / n) * d);
    };
    auto in_cube = [&](const Vec& x) { return (x.array() >= 0.0).all() && (x.array() <= 1.0).all(); };
    StabilityResult out;
    out.worst_ratio = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < rep.marked.size(); ++i) {
        if (!rep.marked.test(i)) continue;
        double t = rep.witness[static_cast<std::size_t>(i)];
        Vec x = rep.marked.center(i);
        Vec y = x + t * e.vec();
        double r = 0.999 * eps * std::abs(t) / 16.0;
        for (int k = 0; k < samples_per_pair; ++k) {
            Vec z = ball(x, r), w = ball(y, r);
            if (!in_cube(z) || !in_cube(w)) continue;
            double lhs = (F(w) - F(z)).norm();
            double rhs = 0.5 * eps * (z - w).norm();
            ++out.pairs;
            out.worst_ratio = std::min(out.worst_ratio, lhs / rhs);
            if (lhs < rhs) ++out.failures;
        }
    }
    return out;
}

}  // namespace cw
