#include "conewidth/grid_set.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "conewidth/errors.hpp"
#include "conewidth/format.hpp"

namespace cw {

Index grid_cell_count(int dim, int N) {
    if (dim < 1 || dim > 3) throw DomainError("grid: dimension must be 1, 2 or 3");
    if (N < 1) throw DomainError("grid: resolution must be positive");
    Index total = 1;
    for (int d = 0; d < dim; ++d) {
        total *= N;
        if (total > kMaxCells) throw ResourceError("grid: " + std::to_string(N) + "^" + std::to_string(dim) +
                                                   " cells exceeds the memory cap");
    }
    return total;
}

GridSet::GridSet(int dim, int N, SetRole role, int k0) : dim_(dim), N_(N), k0_(k0), role_(role) {
    mask_.assign(static_cast<std::size_t>(grid_cell_count(dim, N)), 0);
}

Index GridSet::index(const Coord& c) const {
    Index idx = 0;
    for (int d = dim_ - 1; d >= 0; --d) idx = idx * N_ + c[d];
    return idx;
}

Coord GridSet::coords(Index idx) const {
    Coord c{0, 0, 0};
    for (int d = 0; d < dim_; ++d) {
        c[d] = static_cast<int>(idx % N_);
        idx /= N_;
    }
    return c;
}

bool GridSet::in_range(const Coord& c) const {
    for (int d = 0; d < dim_; ++d)
        if (c[d] < 0 || c[d] >= N_) return false;
    return true;
}

Vec GridSet::center(const Coord& c) const {
    Vec x(dim_);
    for (int d = 0; d < dim_; ++d) x[d] = (c[d] + 0.5) / N_;
    return x;
}

Vec GridSet::center(Index idx) const { return center(coords(idx)); }

Index GridSet::count() const {
    Index n = 0;
    for (auto v : mask_) n += v;
    return n;
}

int GridSet::margin_layers() const {
    int best = N_;
    for (Index i = 0; i < size(); ++i) {
        if (!test(i)) continue;
        Coord c = coords(i);
        for (int d = 0; d < dim_; ++d) best = std::min(best, std::min(c[d], N_ - 1 - c[d]));
    }
    return best;
}

Index GridSet::locate(const Vec& x) const {
    Coord c{0, 0, 0};
    for (int d = 0; d < dim_; ++d) {
        if (!(x[d] >= 0.0 && x[d] < 1.0)) return -1;
        c[d] = std::min(N_ - 1, static_cast<int>(std::floor(x[d] * N_)));
    }
    return index(c);
}

namespace {
void require_same_grid(const GridSet& a, const GridSet& b) {
    if (a.dim() != b.dim() || a.N() != b.N()) throw ArgumentError("grid sets live on different grids");
}
}  // namespace

GridSet GridSet::set_union(const GridSet& o) const {
    require_same_grid(*this, o);
    GridSet r = *this;
    for (Index i = 0; i < size(); ++i) r.set(i, test(i) || o.test(i));
    return r;
}

GridSet GridSet::set_difference(const GridSet& o) const {
    require_same_grid(*this, o);
    GridSet r = *this;
    for (Index i = 0; i < size(); ++i) r.set(i, test(i) && !o.test(i));
    return r;
}

bool GridSet::subset_of(const GridSet& o) const {
    require_same_grid(*this, o);
    for (Index i = 0; i < size(); ++i)
        if (test(i) && !o.test(i)) return false;
    return true;
}

bool GridSet::operator==(const GridSet& o) const {
    return dim_ == o.dim_ && N_ == o.N_ && mask_ == o.mask_;
}

SampledField::SampledField(int dim, int N, std::vector<double> values)
    : dim_(dim), N_(N), values_(std::move(values)) {
    if (static_cast<Index>(values_.size()) != grid_cell_count(dim, N))
        throw ArgumentError("field: value count does not match the grid");
}

namespace {
struct InterpPos {
    int i[3] = {0, 0, 0};
    double f[3] = {0, 0, 0};
    bool inside[3] = {true, true, true};
};

InterpPos interp_pos(const Vec& x, int dim, int N) {
    InterpPos p;
    for (int d = 0; d < dim; ++d) {
        double u = x[d] * N - 0.5;
        if (N == 1) {
            p.i[d] = 0;
            p.f[d] = 0.0;
            p.inside[d] = false;
            continue;
        }
        if (u <= 0.0) {
            p.inside[d] = u == 0.0;
            u = 0.0;
        } else if (u >= N - 1) {
            p.inside[d] = u == N - 1;
            u = N - 1;
        }
        int i = std::min(static_cast<int>(std::floor(u)), N - 2);
        p.i[d] = i;
        p.f[d] = u - i;
    }
    return p;
}
}  // namespace

double SampledField::eval(const Vec& x) const {
    InterpPos p = interp_pos(x, dim_, N_);
    double acc = 0.0;
    int corners = 1 << dim_;
    for (int m = 0; m < corners; ++m) {
        double w = 1.0;
        Index idx = 0;
        for (int d = dim_ - 1; d >= 0; --d) {
            int bit = (m >> d) & 1;
            if (N_ == 1 && bit) {
                w = 0.0;
                break;
            }
            w *= bit ? p.f[d] : 1.0 - p.f[d];
            idx = idx * N_ + p.i[d] + bit;
        }
        if (w != 0.0) acc += w * values_[static_cast<std::size_t>(idx)];
    }
    return acc;
}

Vec SampledField::gradient(const Vec& x) const {
    InterpPos p = interp_pos(x, dim_, N_);
    Vec g = Vec::Zero(dim_);
    if (N_ == 1) return g;
    int corners = 1 << dim_;
    for (int m = 0; m < corners; ++m) {
        Index idx = 0;
        for (int d = dim_ - 1; d >= 0; --d) idx = idx * N_ + p.i[d] + ((m >> d) & 1);
        double v = values_[static_cast<std::size_t>(idx)];
        for (int k = 0; k < dim_; ++k) {
            if (!p.inside[k]) continue;
            double w = (((m >> k) & 1) ? 1.0 : -1.0) * N_;
            for (int d = 0; d < dim_; ++d) {
                if (d == k) continue;
                w *= ((m >> d) & 1) ? p.f[d] : 1.0 - p.f[d];
            }
            g[k] += w * v;
        }
    }
    return g;
}

double SampledField::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

void IfsSpec::validate() const {
    if (!(ratio > 0.0 && ratio <= 0.5)) throw ValidationError("ifs: ratio must lie in (0, 1/2]");
    if (depth < 0) throw ValidationError("ifs: depth must be non-negative");
    if (offsets.empty()) throw ValidationError("ifs: no maps");
    int n = static_cast<int>(offsets[0].size());
    if (n < 1 || n > 3) throw ValidationError("ifs: dimension must be 1, 2 or 3");
    for (const auto& o : offsets) {
        if (o.size() != n) throw ValidationError("ifs: offset dimension mismatch");
        for (int d = 0; d < n; ++d)
            if (o[d] < -1e-12 || o[d] + ratio > 1.0 + 1e-12) throw ValidationError("ifs: map leaves the unit cube");
    }
    for (std::size_t a = 0; a < offsets.size(); ++a)
        for (std::size_t b = a + 1; b < offsets.size(); ++b) {
            bool separated = false;
            for (int d = 0; d < n; ++d)
                if (std::abs(offsets[a][d] - offsets[b][d]) >= ratio - 1e-12) separated = true;
            if (!separated)
                throw ValidationError("ifs: maps " + std::to_string(a) + " and " + std::to_string(b) + " overlap");
        }
}

IfsSpec IfsSpec::four_corner(int depth) {
    IfsSpec s;
    s.ratio = 0.25;
    s.depth = depth;
    s.offsets = {Vec::Zero(2), Vec::Zero(2), Vec::Zero(2), Vec::Zero(2)};
    s.offsets[1] << 0.75, 0.0;
    s.offsets[2] << 0.0, 0.75;
    s.offsets[3] << 0.75, 0.75;
    return s;
}

namespace {
// Lower corners in the unit cube, before rescaling, plus the common side.
std::vector<Vec> ifs_corners(const IfsSpec& spec, double& side) {
    int n = static_cast<int>(spec.offsets[0].size());
    std::vector<Vec> cur{Vec::Zero(n)};
    side = 1.0;
    for (int k = 0; k < spec.depth; ++k) {
        if (cur.size() * spec.offsets.size() > static_cast<std::size_t>(kMaxCells))
            throw ResourceError("ifs: too many boxes at depth " + std::to_string(spec.depth));
        std::vector<Vec> next;
        next.reserve(cur.size() * spec.offsets.size());
        for (const auto& o : cur)
            for (const auto& off : spec.offsets) next.push_back(o + side * off);
        side *= spec.ratio;
        cur.swap(next);
    }
    return cur;
}

bool near_integer(double v, double tol = 1e-9) { return std::abs(v - std::round(v)) <= tol; }
}  // namespace

int ifs_min_resolution(const IfsSpec& spec, int k0) {
    spec.validate();
    if (k0 != 0 && k0 < 3) throw DomainError("ifs: k0 must be 0 or at least 3");
    double side = 0.0;
    auto corners = ifs_corners(spec, side);
    double a = k0 ? 1.0 / k0 : 0.0;
    double scale = 1.0 - 2.0 * a;
    for (int N = 1; N <= (1 << 16); ++N) {
        if (!near_integer(a * N) || !near_integer(side * scale * N) || side * scale * N < 0.5) continue;
        bool ok = true;
        for (const auto& c : corners) {
            for (int d = 0; d < c.size() && ok; ++d) ok = near_integer((a + scale * c[d]) * N);
            if (!ok) break;
        }
        if (ok) return N;
    }
    throw ResolutionError("ifs: no aligned resolution up to 65536");
}

GridSet generate_ifs(const IfsSpec& spec, int k0, int N) {
    spec.validate();
    if (k0 != 0 && k0 < 3) throw DomainError("ifs: k0 must be 0 or at least 3");
    int n = static_cast<int>(spec.offsets[0].size());
    grid_cell_count(n, N);
    double side = 0.0;
    auto corners = ifs_corners(spec, side);
    double a = k0 ? 1.0 / k0 : 0.0;
    double scale = 1.0 - 2.0 * a;
    double cells = side * scale * N;
    if (!near_integer(cells) || cells < 0.5)
        throw ResolutionError("ifs: boxes of side " + fmt_double(side * scale) + " are misaligned at N = " +
                              std::to_string(N));
    int span = static_cast<int>(std::lround(cells));
    GridSet g(n, N, SetRole::Compact, k0);
    for (const auto& c : corners) {
        Coord lo{0, 0, 0};
        for (int d = 0; d < n; ++d) {
            double v = (a + scale * c[d]) * N;
            if (!near_integer(v))
                throw ResolutionError("ifs: box corner misaligned at N = " + std::to_string(N));
            lo[d] = static_cast<int>(std::lround(v));
        }
        Coord hi{1, 1, 1};
        for (int d = 0; d < n; ++d) hi[d] = lo[d] + span;
        for (int z = lo[2]; z < (n > 2 ? hi[2] : 1); ++z)
            for (int y = lo[1]; y < (n > 1 ? hi[1] : 1); ++y)
                for (int x = lo[0]; x < hi[0]; ++x) g.set(g.index({x, y, z}));
    }
    return g;
}

GridSet four_corner_cantor(int depth, int k0, int N) {
    IfsSpec spec = IfsSpec::four_corner(depth);
    if (N == 0) N = ifs_min_resolution(spec, k0);
    return generate_ifs(spec, k0, N);
}

namespace {
// Exact 1-D squared distance transform (lower envelope of parabolas).
void dt1d(const double* f, double* out, int n, std::vector<int>& v, std::vector<double>& z) {
    const double inf = std::numeric_limits<double>::infinity();
    v.assign(static_cast<std::size_t>(n), 0);
    z.assign(static_cast<std::size_t>(n) + 1, 0.0);
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[q] == inf) continue;
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -inf;
            z[1] = inf;
            continue;
        }
        double s;
        while (true) {
            int p = v[static_cast<std::size_t>(k)];
            s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
            if (s <= z[static_cast<std::size_t>(k)] && k > 0) {
                --k;
                continue;
            }
            break;
        }
        if (s <= z[static_cast<std::size_t>(k)]) {
            v[static_cast<std::size_t>(k)] = q;
            z[static_cast<std::size_t>(k) + 1] = inf;
            continue;
        }
        ++k;
        v[static_cast<std::size_t>(k)] = q;
        z[static_cast<std::size_t>(k)] = s;
        z[static_cast<std::size_t>(k) + 1] = inf;
    }
    if (k < 0) {
        for (int q = 0; q < n; ++q) out[q] = inf;
        return;
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
        while (z[static_cast<std::size_t>(j) + 1] < q) ++j;
        int p = v[static_cast<std::size_t>(j)];
        out[q] = double(q - p) * (q - p) + f[p];
    }
}
}  // namespace

std::vector<double> squared_distance_transform(const GridSet& s) {
    const double inf = std::numeric_limits<double>::infinity();
    const int N = s.N();
    std::vector<double> D(static_cast<std::size_t>(s.size()));
    for (Index i = 0; i < s.size(); ++i) D[static_cast<std::size_t>(i)] = s.test(i) ? 0.0 : inf;
    std::vector<double> line(static_cast<std::size_t>(N)), res(static_cast<std::size_t>(N));
    std::vector<int> v;
    std::vector<double> z;
    Index stride = 1;
    for (int d = 0; d < s.dim(); ++d) {
        Index lines = s.size() / N;
        for (Index l = 0; l < lines; ++l) {
            Index base = (l / stride) * stride * N + (l % stride);
            for (int q = 0; q < N; ++q) line[static_cast<std::size_t>(q)] = D[static_cast<std::size_t>(base + q * stride)];
            dt1d(line.data(), res.data(), N, v, z);
            for (int q = 0; q < N; ++q) D[static_cast<std::size_t>(base + q * stride)] = res[static_cast<std::size_t>(q)];
        }
        stride *= N;
    }
    return D;
}

GridSet dilate(const GridSet& s, double delta) {
    if (!(delta >= 0.0) || !std::isfinite(delta)) throw DomainError("dilate: radius must be non-negative");
    GridSet r(s.dim(), s.N(), SetRole::Open, s.k0());
    auto D = squared_distance_transform(s);
    double reach = delta * s.N() + 0.5;
    double lim = reach * reach * (1.0 + 1e-12);
    for (Index i = 0; i < s.size(); ++i) r.set(i, D[static_cast<std::size_t>(i)] <= lim);
    return r;
}

SampledField build_cutoff(const GridSet& omega, double margin) {
    if (!(margin > 2.0 * omega.h()))
        throw ResolutionError("cutoff: margin " + fmt_double(margin) + " does not exceed two cells");
    auto D = squared_distance_transform(omega);
    std::vector<double> vals(D.size());
    double h = omega.h();
    for (std::size_t i = 0; i < D.size(); ++i) {
        double dist = std::max(0.0, std::sqrt(D[i]) * h - 0.5 * h);
        vals[i] = std::clamp(1.0 - 2.0 * dist / margin, 0.0, 1.0);
    }
    return SampledField(omega.dim(), omega.N(), std::move(vals));
}

namespace {
template <class Visit>
void clip_segment(int dim, int N, const Vec& p, const Vec& q, Visit&& visit) {
    std::vector<double> ts{0.0, 1.0};
    for (int d = 0; d < dim; ++d) {
        double a = p[d] * N, b = q[d] * N;
        if (a == b) continue;
        double lo = std::min(a, b), hi = std::max(a, b);
        for (double k = std::floor(lo) + 1.0; k < hi; k += 1.0) {
            double t = (k - a) / (b - a);
            if (t > 0.0 && t < 1.0) ts.push_back(t);
        }
    }
    std::sort(ts.begin(), ts.end());
    for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
        double t0 = ts[k], t1 = ts[k + 1];
        if (!(t1 > t0)) continue;
        double tm = 0.5 * (t0 + t1);
        visit(t0, t1, Vec(p + tm * (q - p)));
    }
}

// Occupied cells a midpoint belongs to; a point on a face between cells is
// inside only when every adjacent cell is occupied.
template <class Emit>
void cells_at(const GridSet& s, const Vec& m, const Vec& p, const Vec& q, Emit&& emit) {
    int dim = s.dim(), N = s.N();
    Coord base{0, 0, 0};
    int amb[3] = {0, 0, 0};
    for (int d = 0; d < dim; ++d) {
        double u = m[d] * N;
        bool on_plane = p[d] == q[d] && std::abs(u - std::round(u)) <= 1e-12 * std::max(1.0, std::abs(u));
        if (on_plane) {
            base[d] = static_cast<int>(std::lround(u)) - 1;
            amb[d] = 1;
        } else {
            base[d] = static_cast<int>(std::floor(u));
        }
    }
    for (int m2 = 0; m2 < (1 << dim); ++m2) {
        Coord c = base;
        bool skip = false;
        for (int d = 0; d < dim; ++d) {
            int bit = (m2 >> d) & 1;
            if (bit && !amb[d]) {
                skip = true;
                break;
            }
            c[d] += bit;
        }
        if (!skip) emit(c, amb[0] + amb[1] + amb[2]);
    }
}
}  // namespace

double polyline_set_intersection_length(const GridSet& s, const std::vector<Vec>& vs) {
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < vs.size(); ++k) {
        const Vec& p = vs[k];
        const Vec& q = vs[k + 1];
        if (p.size() != s.dim()) throw ArgumentError("intersection: dimension mismatch");
        double L = (q - p).norm();
        clip_segment(s.dim(), s.N(), p, q, [&](double t0, double t1, const Vec& m) {
            bool inside = true;
            cells_at(s, m, p, q, [&](const Coord& c, int) { inside = inside && s.test(c); });
            if (inside) total += L * (t1 - t0);
        });
    }
    return total;
}

double curve_set_intersection_length(const GridSet& s, const CanonicalCurve& c) {
    std::vector<Vec> vs;
    for (std::size_t k = 0; k < c.size(); ++k) vs.push_back(c.vertex(k));
    return polyline_set_intersection_length(s, vs);
}

GridSet rasterize_segment(int N, const Vec& a, const Vec& b, double thickness) {
    int dim = static_cast<int>(a.size());
    GridSet g(dim, N);
    clip_segment(dim, N, a, b, [&](double, double, const Vec& m) {
        cells_at(g, m, a, b, [&](const Coord& c, int) {
            if (g.in_range(c)) g.set(g.index(c));
        });
    });
    if (thickness > 0.0) {
        Vec d = b - a;
        double dd = d.squaredNorm();
        for (Index i = 0; i < g.size(); ++i) {
            Vec x = g.center(i);
            double t = dd > 0 ? std::clamp((x - a).dot(d) / dd, 0.0, 1.0) : 0.0;
            if ((x - a - t * d).norm() <= thickness + 1e-12) g.set(i);
        }
    }
    return g;
}

GridSet axis_box(int dim, int N, const Coord& lo, const Coord& hi) {
    GridSet g(dim, N);
    for (Index i = 0; i < g.size(); ++i) {
        Coord c = g.coords(i);
        bool in = true;
        for (int d = 0; d < dim; ++d) in = in && c[d] >= lo[d] && c[d] < hi[d];
        if (in) g.set(i);
    }
    return g;
}

GridSet pad_grid_set(const GridSet& s, int pad) {
    if (pad < 0) throw DomainError("pad must be non-negative");
    GridSet out(s.dim(), s.N() + 2 * pad, s.role(), s.k0());
    for (Index i = 0; i < s.size(); ++i) {
        if (!s.test(i)) continue;
        Coord c = s.coords(i);
        for (int d = 0; d < s.dim(); ++d) c[d] += pad;
        out.set(out.index(c));
    }
    return out;
}

namespace {
std::vector<Index> rle_of(const GridSet& s) {
    std::vector<Index> runs;
    std::uint8_t cur = 0;
    Index len = 0;
    for (auto v : s.mask()) {
        std::uint8_t b = v ? 1 : 0;
        if (b == cur) {
            ++len;
        } else {
            runs.push_back(len);
            cur = b;
            len = 1;
        }
    }
    runs.push_back(len);
    return runs;
}

void fill_from_rle(GridSet& g, const std::vector<Index>& runs) {
    Index pos = 0;
    bool val = false;
    for (Index r : runs) {
        if (r < 0 || pos + r > g.size()) throw ArgumentError("grid set: run lengths overflow the grid");
        for (Index i = 0; i < r; ++i) g.set(pos + i, val);
        pos += r;
        val = !val;
    }
    if (pos != g.size()) throw ArgumentError("grid set: run lengths do not cover the grid");
}
}  // namespace

void write_grid_set(std::ostream& os, const GridSet& s) {
    os << s.dim() << ' ' << s.N() << ' ' << s.k0() << ' ' << (s.role() == SetRole::Compact ? 'C' : 'O') << '\n';
    auto runs = rle_of(s);
    for (std::size_t i = 0; i < runs.size(); ++i) {
        os << runs[i];
        os << ((i % 16 == 15 || i + 1 == runs.size()) ? '\n' : ' ');
    }
}

GridSet read_grid_set(std::istream& is) {
    int n = 0, N = 0, k0 = 0;
    char flag = 0;
    if (!(is >> n >> N >> k0 >> flag)) throw ArgumentError("grid set: bad header");
    if (flag != 'C' && flag != 'O') throw ArgumentError("grid set: role flag must be C or O");
    GridSet g(n, N, flag == 'C' ? SetRole::Compact : SetRole::Open, k0);
    std::vector<Index> runs;
    Index r;
    while (is >> r) runs.push_back(r);
    if (!is.eof()) throw ArgumentError("grid set: non-numeric run length");
    fill_from_rle(g, runs);
    return g;
}

void save_grid_set(const std::string& path, const GridSet& s) {
    std::ofstream out(path);
    if (!out) throw ArgumentError("cannot write " + path);
    if (path.size() > 5 && path.substr(path.size() - 5) == ".json")
        out << grid_set_to_json(s).dump(1) << '\n';
    else
        write_grid_set(out, s);
}

GridSet load_grid_set(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot read " + path);
    if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ArgumentError(std::string("grid set: ") + e.what());
        }
        return grid_set_from_json(j);
    }
    return read_grid_set(in);
}

nlohmann::json grid_set_to_json(const GridSet& s) {
    return {{"dim", s.dim()},
            {"N", s.N()},
            {"k0", s.k0()},
            {"role", s.role() == SetRole::Compact ? "compact" : "open"},
            {"rle", rle_of(s)}};
}

GridSet grid_set_from_json(const nlohmann::json& j) {
    try {
        std::string role = j.at("role").get<std::string>();
        if (role != "compact" && role != "open") throw ArgumentError("grid set: unknown role " + role);
        GridSet g(j.at("dim").get<int>(), j.at("N").get<int>(),
                  role == "compact" ? SetRole::Compact : SetRole::Open, j.value("k0", 0));
        fill_from_rle(g, j.at("rle").get<std::vector<Index>>());
        return g;
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(std::string("grid set: ") + e.what());
    }
}

void write_field_csv(std::ostream& os, const SampledField& f) {
    static const char* names[3] = {"i", "j", "k"};
    std::vector<std::string> head;
    for (int d = 0; d < f.dim(); ++d) head.push_back(names[d]);
    head.push_back("value");
    os << csv_join(head) << '\n';
    GridSet shape(f.dim(), f.N());
    for (Index i = 0; i < shape.size(); ++i) {
        Coord c = shape.coords(i);
        std::vector<std::string> row;
        for (int d = 0; d < f.dim(); ++d) row.push_back(std::to_string(c[d]));
        row.push_back(fmt_double(f.at(i)));
        os << csv_join(row) << '\n';
    }
}

}  // namespace cw
