#include "conewidth/width.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "conewidth/errors.hpp"
#include "conewidth/format.hpp"

namespace cw {

namespace {
Index linear_offset(const Coord& c, int dim, int N) {
    Index off = 0;
    for (int d = dim - 1; d >= 0; --d) off = off * N + c[d];
    return off;
}

bool lex_less(const Coord& a, const Coord& b, int dim) {
    for (int d = 0; d < dim && d < 3; ++d)
        if (a[d] != b[d]) return a[d] < b[d];
    return false;
}
}  // namespace

std::vector<StencilEdge> cone_stencil(int dim, int N, const Cone& cone, int radius) {
    if (cone.dim() != dim) throw DomainError("stencil: cone dimension mismatch");
    if (radius < kMinStencilRadius || radius > kMaxStencilRadius)
        throw DomainError("stencil: radius must lie in [" + std::to_string(kMinStencilRadius) + ", " +
                          std::to_string(kMaxStencilRadius) + "]");
    const double h = 1.0 / N;
    std::vector<StencilEdge> out;
    int lo[3] = {-radius, dim > 1 ? -radius : 0, dim > 2 ? -radius : 0};
    int hi[3] = {radius, dim > 1 ? radius : 0, dim > 2 ? radius : 0};
    for (int z = lo[2]; z <= hi[2]; ++z)
        for (int y = lo[1]; y <= hi[1]; ++y)
            for (int x = lo[0]; x <= hi[0]; ++x) {
                Coord o{x, y, z};
                Vec v(dim);
                for (int d = 0; d < dim; ++d) v[d] = o[d];
                if (!cone_contains(cone, v)) continue;
                StencilEdge e;
                e.step = o;
                e.length = v.norm() * h;
                std::vector<double> ts{0.0, 1.0};
                for (int d = 0; d < dim; ++d) {
                    if (o[d] > 0)
                        for (int m = 1; m <= o[d]; ++m) ts.push_back((m - 0.5) / o[d]);
                    else if (o[d] < 0)
                        for (int m = 0; m > o[d]; --m) ts.push_back((m - 0.5) / o[d]);
                }
                std::sort(ts.begin(), ts.end());
                for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
                    double t0 = ts[k], t1 = ts[k + 1];
                    if (!(t1 - t0 > 1e-14)) continue;
                    double tm = 0.5 * (t0 + t1);
                    Coord c{0, 0, 0};
                    for (int d = 0; d < dim; ++d) c[d] = static_cast<int>(std::floor(0.5 + tm * o[d]));
                    StencilPiece p{c, linear_offset(c, dim, N), e.length * (t1 - t0)};
                    if (!e.pieces.empty() && e.pieces.back().cell == c)
                        e.pieces.back().length += p.length;
                    else
                        e.pieces.push_back(p);
                }
                out.push_back(std::move(e));
            }
    // Predecessors y - o come out in ascending lexicographic order.
    std::sort(out.begin(), out.end(), [dim](const StencilEdge& a, const StencilEdge& b) {
        return lex_less(b.step, a.step, dim);
    });
    return out;
}

ConeGraph::ConeGraph(int dim, int N, const Cone& cone, int radius)
    : dim_(dim), N_(N), radius_(radius), cone_(cone) {
    if (N < 8) throw DomainError("cone graph: resolution must be at least 8");
    Index total = grid_cell_count(dim, N);
    stencil_ = cone_stencil(dim, N, cone, radius);
    if (stencil_.size() > 32767) throw ResourceError("cone graph: stencil has too many offsets");
    if (stencil_.empty())
        throw ResolutionError("cone graph: no lattice offset of radius " + std::to_string(radius) +
                              " lies inside the cone");
    std::vector<double> proj(static_cast<std::size_t>(total));
    GridSet shape(dim, N);
    const Vec& e = cone.axis().vec();
    for (Index i = 0; i < total; ++i) {
        Coord c = shape.coords(i);
        double p = 0.0;
        for (int d = 0; d < dim; ++d) p += (c[d] + 0.5) * e[d];
        proj[static_cast<std::size_t>(i)] = p;
    }
    order_.resize(static_cast<std::size_t>(total));
    std::iota(order_.begin(), order_.end(), Index(0));
    std::stable_sort(order_.begin(), order_.end(), [&](Index a, Index b) {
        return proj[static_cast<std::size_t>(a)] < proj[static_cast<std::size_t>(b)];
    });
}

ConeGraph build_cone_graph(int dim, int N, const Cone& cone, int radius) { return ConeGraph(dim, N, cone, radius); }

PathResult longest_path(const ConeGraph& g, const GridSet& set, bool keep_node_values) {
    if (set.dim() != g.dim() || set.N() != g.N()) throw ArgumentError("longest path: set and graph grids differ");
    const int dim = g.dim(), N = g.N();
    const auto& st = g.stencil();
    const auto& mask = set.mask();
    const Index total = g.node_count();
    std::vector<double> V(static_cast<std::size_t>(total), 0.0);
    std::vector<std::int16_t> pred(static_cast<std::size_t>(total), -1);
    for (Index y : g.order()) {
        Coord c = set.coords(y);
        double best = -1.0;
        int bp = -1;
        for (std::size_t s = 0; s < st.size(); ++s) {
            const auto& e = st[s];
            bool ok = true;
            for (int d = 0; d < dim; ++d) {
                int q = c[d] - e.step[d];
                if (q < 0 || q >= N) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            Index p = y - linear_offset(e.step, dim, N);
            double val = V[static_cast<std::size_t>(p)];
            for (const auto& pc : e.pieces)
                if (mask[static_cast<std::size_t>(p + pc.offset)]) val += pc.length;
            if (val > best) {
                best = val;
                bp = static_cast<int>(s);
            }
        }
        if (bp >= 0) {
            V[static_cast<std::size_t>(y)] = best;
            pred[static_cast<std::size_t>(y)] = static_cast<std::int16_t>(bp);
        }
    }
    // Best sink, earliest lexicographic coordinates on ties.
    double best = -1.0;
    Index arg = -1;
    Coord argc{0, 0, 0};
    for (Index y = 0; y < total; ++y) {
        double v = V[static_cast<std::size_t>(y)];
        if (v < best) continue;
        Coord c = set.coords(y);
        if (v == best && !lex_less(c, argc, dim)) continue;
        bool sink = true;
        for (const auto& e : st) {
            bool in = true;
            for (int d = 0; d < dim; ++d) {
                int q = c[d] + e.step[d];
                if (q < 0 || q >= N) {
                    in = false;
                    break;
                }
            }
            if (in) {
                sink = false;
                break;
            }
        }
        if (!sink) continue;
        best = v;
        arg = y;
        argc = c;
    }
    PathResult r;
    r.value = std::max(best, 0.0);
    for (Index y = arg; y >= 0;) {
        r.nodes.push_back(y);
        int s = pred[static_cast<std::size_t>(y)];
        if (s < 0) break;
        y -= linear_offset(st[static_cast<std::size_t>(s)].step, dim, N);
    }
    std::reverse(r.nodes.begin(), r.nodes.end());
    if (keep_node_values) r.node_values = std::move(V);
    return r;
}

std::optional<ConeCurve> path_to_curve(const ConeGraph& g, const std::vector<Index>& nodes) {
    if (nodes.size() < 2) return std::nullopt;
    GridSet shape(g.dim(), g.N());
    std::vector<Vec> vs;
    for (Index i : nodes) vs.push_back(shape.center(i));
    return ConeCurve(std::move(vs), g.cone());
}

std::string WidthReport::to_csv() const {
    std::ostringstream os;
    std::vector<std::string> head{"sigma"};
    for (int d = 0; d < dim; ++d) head.push_back("axis_" + std::to_string(d));
    head.push_back("delta");
    head.push_back("sup_value");
    os << csv_join(head) << '\n';
    for (std::size_t k = 0; k < deltas.size(); ++k) {
        std::vector<std::string> row{fmt_double(sigma)};
        for (int d = 0; d < dim; ++d) row.push_back(fmt_double(axis[d]));
        row.push_back(fmt_double(deltas[k]));
        row.push_back(fmt_double(sup_values[k]));
        os << csv_join(row) << '\n';
    }
    return os.str();
}

nlohmann::json WidthReport::to_json() const {
    nlohmann::json j{{"dim", dim},     {"N", N},         {"sigma", sigma},           {"axis", vec_to_json(axis)},
                     {"radius", radius}, {"deltas", deltas}, {"sup_values", sup_values}, {"width", width}};
    if (witness) j["witness"] = witness->to_json();
    return j;
}

std::vector<double> default_schedule(int N, double delta0, double floor_cells) {
    double floor_delta = floor_cells / N;
    std::vector<double> s;
    for (double d = delta0; d >= floor_delta * (1.0 - 1e-12); d *= 0.5) s.push_back(d);
    if (s.empty()) s.push_back(floor_delta);
    return s;
}

namespace {
void check_schedule(const std::vector<double>& schedule, double h) {
    if (schedule.empty()) throw ArgumentError("width: empty delta schedule");
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        if (!(schedule[k] > 0.0) || !std::isfinite(schedule[k]))
            throw ArgumentError("width: schedule values must be positive");
        if (k && !(schedule[k] < schedule[k - 1])) throw ArgumentError("width: schedule must strictly decrease");
    }
    if (schedule.back() < 2.0 * h * (1.0 - 1e-12))
        throw ArgumentError("width: smallest delta " + fmt_double(schedule.back()) + " is below two cells");
}
}  // namespace

WidthReport estimate_width(const GridSet& set, const ConeGraph& g, const std::vector<double>& schedule,
                           bool want_witness) {
    if (set.dim() != g.dim() || set.N() != g.N()) throw ArgumentError("width: set and graph grids differ");
    if (!set.is_compactly_interior()) throw DomainError("width: set touches the grid boundary");
    check_schedule(schedule, set.h());
    WidthReport r;
    r.dim = set.dim();
    r.N = set.N();
    r.sigma = g.cone().sigma();
    r.axis = g.cone().axis().vec();
    r.radius = g.radius();
    r.deltas = schedule;
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        GridSet om = dilate(set, schedule[k]);
        PathResult p = longest_path(g, om);
        r.sup_values.push_back(p.value);
        if (k + 1 == schedule.size()) {
            r.width = p.value;
            if (want_witness) {
                r.witness_nodes = p.nodes;
                r.witness = path_to_curve(g, p.nodes);
            }
        }
    }
    return r;
}

WidthReport estimate_width(const GridSet& set, const Cone& cone, const std::vector<double>& schedule, int radius,
                           bool want_witness) {
    if (set.dim() != cone.dim()) throw DomainError("width: cone dimension mismatch");
    ConeGraph g(set.dim(), set.N(), cone, radius);
    return estimate_width(set, g, schedule, want_witness);
}

SampledField width_function(const GridSet& omega, const ConeGraph& g) {
    PathResult p = longest_path(g, omega, true);
    const auto& V = p.node_values;
    const int dim = g.dim(), N = g.N();
    const double h = 1.0 / N;
    const Vec& e = g.cone().axis().vec();
    int axis = -1, sign = 0;
    for (int d = 0; d < dim; ++d)
        if (std::abs(std::abs(e[d]) - 1.0) < 1e-15) {
            axis = d;
            sign = e[d] > 0 ? 1 : -1;
        }
    // Curves may leave the cube through a boundary node z and then run
    // straight to x + s e; the cheapest such s is max(0, |p|/beta - a).
    const double b = beta(g.cone().sigma());
    std::vector<Index> exits;
    for (Index z = 0; z < static_cast<Index>(V.size()); ++z) {
        if (!(V[static_cast<std::size_t>(z)] > 0.0)) continue;
        Coord c = omega.coords(z);
        bool edge = false;
        for (int d = 0; d < dim; ++d) edge = edge || c[d] == 0 || c[d] == N - 1;
        if (edge) exits.push_back(z);
    }
    std::vector<Vec> exit_pos;
    for (Index z : exits) exit_pos.push_back(omega.center(z));
    std::vector<double> W(V.size(), 0.0);
    const auto& order = g.order();
    SampledField partial(dim, N, std::vector<double>(V.size(), 0.0));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Index x = *it;
        double w = V[static_cast<std::size_t>(x)];
        if (!exits.empty()) {
            Vec xc = omega.center(x);
            for (std::size_t k = 0; k < exits.size(); ++k) {
                double vz = V[static_cast<std::size_t>(exits[k])];
                if (vz <= w) continue;
                Vec d = xc - exit_pos[k];
                double a = d.dot(e);
                double pn = std::sqrt(std::max(0.0, d.squaredNorm() - a * a));
                w = std::max(w, vz - std::max(0.0, pn / b - a));
            }
        }
        Coord c = omega.coords(x);
        if (axis >= 0) {
            Coord n = c;
            n[axis] += sign;
            if (n[axis] >= 0 && n[axis] < N) w = std::max(w, W[static_cast<std::size_t>(omega.index(n))] - h);
        } else {
            Vec t = omega.center(c) + 2.0 * h * e;
            bool inside = true;
            for (int d = 0; d < dim; ++d) inside = inside && t[d] >= 0.5 * h && t[d] <= 1.0 - 0.5 * h;
            if (inside) w = std::max(w, partial.eval(t) - 2.0 * h);
        }
        W[static_cast<std::size_t>(x)] = w;
        partial.values()[static_cast<std::size_t>(x)] = w;
    }
    return SampledField(dim, N, std::move(W));
}

SampledField width_function(const GridSet& omega, const Cone& cone, int radius) {
    ConeGraph g(omega.dim(), omega.N(), cone, radius);
    return width_function(omega, g);
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Positive: return "positive";
        case Verdict::NotPositive: return "not_positive";
        default: return "inconclusive";
    }
}

double grid_tolerance(double h, double sigma) { return 2.0 * h * (1.0 + beta(sigma)); }

DifferenceResult width_difference_positive(const GridSet& a, const GridSet& e, const Cone& cone,
                                           const std::vector<double>& schedule, int radius) {
    if (!e.subset_of(a)) throw ArgumentError("width difference: E must be a subset of A");
    ConeGraph g(a.dim(), a.N(), cone, radius);
    DifferenceResult r;
    r.width_a = estimate_width(a, g, schedule, false).width;
    r.width_e = estimate_width(e, g, schedule, false).width;
    r.width_diff = r.width_a - r.width_e;
    r.tolerance = grid_tolerance(a.h(), cone.sigma());
    if (!(r.width_e < r.width_a)) return r;
    GridSet rest = a.set_difference(dilate(e, schedule.back()));
    rest.set_role(SetRole::Compact);
    double wr = estimate_width(rest, g, schedule, false).width;
    r.margin = wr - 0.5 * r.width_diff;
    r.verdict = r.margin > -r.tolerance ? Verdict::Positive : Verdict::NotPositive;
    return r;
}

namespace {
void orthonormal_frame(const Vec& e, Vec& u1, Vec& u2) {
    Vec t = Vec::Zero(3);
    int k = 0;
    for (int d = 1; d < 3; ++d)
        if (std::abs(e[d]) < std::abs(e[k])) k = d;
    t[k] = 1.0;
    u1 = (t - t.dot(e) * e).normalized();
    u2 = Vec(3);
    u2 << e[1] * u1[2] - e[2] * u1[1], e[2] * u1[0] - e[0] * u1[2], e[0] * u1[1] - e[1] * u1[0];
}
}  // namespace

std::vector<Direction> subcone_net(const Cone& cone, double sigma_prime) {
    if (!(sigma_prime > 0.0 && sigma_prime < 1.0)) throw DomainError("subcone: sigma' must lie in (0,1)");
    const Vec& e = cone.axis().vec();
    const int n = cone.dim();
    std::vector<Direction> out;
    if (n == 1) {
        out.emplace_back(e);
        return out;
    }
    double step = 2.0 * std::asin(sigma_prime / 4.0);
    double half = std::acos(1.0 - cone.sigma());
    if (n == 2) {
        double th = std::atan2(e[1], e[0]);
        out.emplace_back(e);
        for (int k = 1; k * step < half; ++k)
            for (int sgn : {1, -1}) {
                double a = th + sgn * k * step;
                Vec v(2);
                v << std::cos(a), std::sin(a);
                if (cone_contains(cone, v)) out.emplace_back(v);
            }
        return out;
    }
    Vec u1, u2;
    orthonormal_frame(e, u1, u2);
    out.emplace_back(e);
    for (int k = 1; k * step < half; ++k) {
        double phi = k * step;
        int m = std::max(1, static_cast<int>(std::ceil(2.0 * M_PI * std::sin(phi) / step)));
        for (int j = 0; j < m; ++j) {
            double a = 2.0 * M_PI * j / m;
            Vec v = std::cos(phi) * e + std::sin(phi) * (std::cos(a) * u1 + std::sin(a) * u2);
            if (cone_contains(cone, v)) out.emplace_back(v);
        }
    }
    return out;
}

SubconeResult subcone_search(const GridSet& set, const Cone& cone, double sigma_prime,
                             const std::vector<double>& schedule, int radius) {
    SubconeResult r;
    check_schedule(schedule, set.h());
    r.tolerance = (2.0 * schedule.back() + 2.0 * set.h()) * (1.0 + beta(sigma_prime));
    for (const auto& d : subcone_net(cone, sigma_prime)) {
        ++r.tried;
        double w = estimate_width(set, Cone(d, sigma_prime), schedule, radius, false).width;
        if (w > r.tolerance) {
            r.direction = d;
            r.width = w;
            return r;
        }
    }
    return r;
}

std::vector<Direction> sweep_directions(int dim, int count) {
    if (count < 1) throw DomainError("sweep: need at least one direction");
    std::vector<Direction> out;
    for (int k = 0; k < count; ++k) {
        Vec v(dim);
        if (dim == 1) {
            v[0] = (k % 2 == 0) ? 1.0 : -1.0;
        } else if (dim == 2) {
            double a = 2.0 * M_PI * k / count;
            v << std::cos(a), std::sin(a);
        } else {
            double z = 1.0 - (2.0 * k + 1.0) / count;
            double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            double a = k * M_PI * (3.0 - std::sqrt(5.0));
            v << r * std::cos(a), r * std::sin(a), z;
        }
        out.emplace_back(v);
    }
    return out;
}

std::vector<SweepRow> uniform_sweep(const GridSet& set, const std::vector<Direction>& dirs, double sigma,
                                    const std::vector<double>& schedule, int radius, int workers) {
    std::vector<SweepRow> rows(dirs.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(dirs.size());
    auto work = [&]() {
        for (std::size_t k; (k = next.fetch_add(1)) < dirs.size();) {
            try {
                rows[k].direction = dirs[k];
                rows[k].report = estimate_width(set, Cone(dirs[k], sigma), schedule, radius, false);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    int nw = std::max(1, std::min<int>(workers, static_cast<int>(dirs.size())));
    if (nw == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < nw; ++i) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    if (rows.empty()) return "";
    int dim = rows[0].direction.dim();
    std::vector<std::string> head{"direction", "sigma"};
    for (int d = 0; d < dim; ++d) head.push_back("axis_" + std::to_string(d));
    head.push_back("delta");
    head.push_back("sup_value");
    os << csv_join(head) << '\n';
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& r = rows[k].report;
        for (std::size_t j = 0; j < r.deltas.size(); ++j) {
            std::vector<std::string> row{std::to_string(k), fmt_double(r.sigma)};
            for (int d = 0; d < dim; ++d) row.push_back(fmt_double(r.axis[d]));
            row.push_back(fmt_double(r.deltas[j]));
            row.push_back(fmt_double(r.sup_values[j]));
            os << csv_join(row) << '\n';
        }
    }
    return os.str();
}

}  // namespace cw
