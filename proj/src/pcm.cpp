#include "conewidth/pcm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "conewidth/errors.hpp"
#include "conewidth/format.hpp"

namespace cw {

namespace {
double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

Mat edge_matrix(const Simplex& s) {
    int n = static_cast<int>(s.vertices.size()) - 1;
    int d = static_cast<int>(s.vertices[0].size());
    Mat M(d, n);
    for (int k = 0; k < n; ++k) M.col(k) = s.vertices[static_cast<std::size_t>(k) + 1] - s.vertices[0];
    return M;
}

using Poly = std::vector<Eigen::Vector2d>;

double poly_area(const Poly& p) {
    double a = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto& u = p[i];
        const auto& v = p[(i + 1) % p.size()];
        a += u.x() * v.y() - u.y() * v.x();
    }
    return 0.5 * a;
}

// Part of a convex polygon with <n, x> <= c.
Poly clip_halfplane(const Poly& p, const Eigen::Vector2d& n, double c) {
    Poly out;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto& a = p[i];
        const auto& b = p[(i + 1) % p.size()];
        double fa = n.dot(a) - c, fb = n.dot(b) - c;
        if (fa <= 0) out.push_back(a);
        if ((fa < 0 && fb > 0) || (fa > 0 && fb < 0)) {
            double t = fa / (fa - fb);
            out.push_back(a + t * (b - a));
        }
    }
    Poly clean;
    for (const auto& v : out)
        if (clean.empty() || (v - clean.back()).norm() > 1e-13) clean.push_back(v);
    while (clean.size() > 1 && (clean.front() - clean.back()).norm() <= 1e-13) clean.pop_back();
    return clean;
}

Poly triangle_poly(const Simplex& s) {
    Poly p;
    for (const auto& v : s.vertices) p.emplace_back(v[0], v[1]);
    if (poly_area(p) < 0) std::reverse(p.begin(), p.end());
    return p;
}

double triangle_overlap(const Simplex& a, const Simplex& b) {
    Poly pa = triangle_poly(a), pb = triangle_poly(b);
    for (std::size_t i = 0; i < pb.size() && pa.size() >= 3; ++i) {
        const auto& u = pb[i];
        const auto& v = pb[(i + 1) % pb.size()];
        Eigen::Vector2d e = v - u;
        Eigen::Vector2d out_normal(e.y(), -e.x());
        pa = clip_halfplane(pa, out_normal, out_normal.dot(u));
    }
    return pa.size() >= 3 ? std::abs(poly_area(pa)) : 0.0;
}
}  // namespace

double Simplex::volume() const {
    Mat M = edge_matrix(*this);
    if (M.rows() != M.cols()) throw ValidationError("simplex: needs n + 1 vertices in R^n");
    return std::abs(M.determinant()) / factorial(static_cast<int>(M.cols()));
}

Vec Simplex::barycentric(const Vec& x) const {
    Mat M = edge_matrix(*this);
    Vec l = M.partialPivLu().solve(x - vertices[0]);
    Vec out(l.size() + 1);
    out[0] = 1.0 - l.sum();
    out.tail(l.size()) = l;
    return out;
}

bool Simplex::contains(const Vec& x, double tol) const { return barycentric(x).minCoeff() >= -tol; }

SimplicialPartition::SimplicialPartition(int dim, std::vector<Simplex> simplices)
    : dim_(dim), simplices_(std::move(simplices)) {
    if (dim < 1 || dim > 3) throw ValidationError("partition: dimension must be 1, 2 or 3");
    if (simplices_.empty()) throw ValidationError("partition: no simplices");
    double total = 0.0;
    for (std::size_t i = 0; i < simplices_.size(); ++i) {
        const auto& s = simplices_[i];
        if (s.vertices.size() != static_cast<std::size_t>(dim) + 1)
            throw ValidationError("partition: simplex " + std::to_string(i) + " has the wrong vertex count");
        for (const auto& v : s.vertices) {
            if (v.size() != dim) throw ValidationError("partition: vertex dimension mismatch");
            for (int d = 0; d < dim; ++d)
                if (v[d] < -1e-12 || v[d] > 1.0 + 1e-12)
                    throw ValidationError("partition: simplex " + std::to_string(i) + " leaves the unit cube");
        }
        double vol = s.volume();
        if (vol < 1e-15) throw ValidationError("partition: simplex " + std::to_string(i) + " is degenerate");
        total += vol;
    }
    for (const auto& s : simplices_) inverse_.push_back(edge_matrix(s).inverse());
    if (std::abs(total - 1.0) > 1e-9)
        throw ValidationError("partition: volumes sum to " + fmt_double(total) + ", not 1");
    if (dim == 1) {
        std::vector<std::pair<double, double>> iv;
        for (const auto& s : simplices_)
            iv.emplace_back(std::min(s.vertices[0][0], s.vertices[1][0]), std::max(s.vertices[0][0], s.vertices[1][0]));
        std::sort(iv.begin(), iv.end());
        for (std::size_t i = 1; i < iv.size(); ++i)
            if (iv[i].first < iv[i - 1].second - 1e-9) throw ValidationError("partition: intervals overlap");
    } else if (dim == 2) {
        double overlap = 0.0;
        for (std::size_t i = 0; i < simplices_.size(); ++i)
            for (std::size_t j = i + 1; j < simplices_.size(); ++j) {
                Eigen::Vector2d lo1(1e9, 1e9), hi1(-1e9, -1e9), lo2 = lo1, hi2 = hi1;
                for (const auto& v : simplices_[i].vertices) {
                    lo1 = lo1.cwiseMin(Eigen::Vector2d(v[0], v[1]));
                    hi1 = hi1.cwiseMax(Eigen::Vector2d(v[0], v[1]));
                }
                for (const auto& v : simplices_[j].vertices) {
                    lo2 = lo2.cwiseMin(Eigen::Vector2d(v[0], v[1]));
                    hi2 = hi2.cwiseMax(Eigen::Vector2d(v[0], v[1]));
                }
                if ((lo1.array() > hi2.array()).any() || (lo2.array() > hi1.array()).any()) continue;
                overlap += triangle_overlap(simplices_[i], simplices_[j]);
            }
        if (overlap > 1e-9) throw ValidationError("partition: simplices overlap on area " + fmt_double(overlap));
    } else {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        for (int k = 0; k < 2000; ++k) {
            Vec x(3);
            for (int d = 0; d < 3; ++d) x[d] = U(rng);
            int hits = 0;
            for (const auto& s : simplices_)
                if (s.barycentric(x).minCoeff() > 1e-9) ++hits;
            if (hits > 1) throw ValidationError("partition: simplices overlap");
        }
    }
}

int SimplicialPartition::locate(const Vec& x) const {
    int best = -1;
    double best_min = -1e-9;
    for (std::size_t i = 0; i < simplices_.size(); ++i) {
        Vec l = inverse_[i] * (x - simplices_[i].vertices[0]);
        double m = std::min(l.minCoeff(), 1.0 - l.sum());
        if (m >= 0.0) return static_cast<int>(i);
        if (m > best_min) {
            best_min = m;
            best = static_cast<int>(i);
        }
    }
    return best;
}

SimplicialPartition SimplicialPartition::kuhn(int dim) {
    std::vector<int> perm(static_cast<std::size_t>(dim));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<Simplex> out;
    do {
        Simplex s;
        Vec v = Vec::Zero(dim);
        s.vertices.push_back(v);
        for (int k : perm) {
            v[k] = 1.0;
            s.vertices.push_back(v);
        }
        out.push_back(s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return SimplicialPartition(dim, std::move(out));
}

PiecewiseCongruentMap::PiecewiseCongruentMap(SimplicialPartition partition, std::vector<AffineCell> cells,
                                             std::string name)
    : partition_(std::move(partition)), cells_(std::move(cells)), name_(std::move(name)) {
    const int n = partition_.dim();
    if (cells_.size() != partition_.size()) throw ValidationError("pcm: one affine cell per simplex required");
    const Index m = cells_.front().b.size();
    if (m < n) throw ValidationError("pcm: target dimension below source dimension");
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        const auto& c = cells_[i];
        if (c.A.rows() != m || c.A.cols() != n || c.b.size() != m)
            throw ValidationError("pcm: cell " + std::to_string(i) + " has inconsistent shape");
        double err = (c.A.transpose() * c.A - Mat::Identity(n, n)).cwiseAbs().maxCoeff();
        if (err > 1e-10)
            throw ValidationError("pcm: cell " + std::to_string(i) + " is not an isometry (error " + fmt_double(err) + ")");
    }
    // Affine pieces agree on a common face iff they agree at the vertices
    // of the intersection, which are vertices of one of the two simplices.
    for (std::size_t i = 0; i < cells_.size(); ++i)
        for (std::size_t j = 0; j < cells_.size(); ++j) {
            if (i == j) continue;
            for (const auto& v : partition_[j].vertices) {
                if (!partition_[i].contains(v, 1e-10)) continue;
                double gap = (eval_in(i, v) - eval_in(j, v)).norm();
                if (gap > 1e-9)
                    throw ValidationError("pcm: cells " + std::to_string(i) + " and " + std::to_string(j) +
                                          " disagree by " + fmt_double(gap) + " on a shared face");
            }
        }
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        Vec x(n), y(n);
        for (int d = 0; d < n; ++d) {
            x[d] = U(rng);
            y[d] = U(rng);
        }
        if ((eval(x) - eval(y)).norm() > (x - y).norm() * (1.0 + 1e-9) + 1e-12)
            throw ValidationError("pcm: map is not 1-Lipschitz");
    }
}

Vec PiecewiseCongruentMap::eval(const Vec& x) const {
    if (x.size() != dim()) throw DomainError("pcm: point dimension mismatch");
    for (int d = 0; d < x.size(); ++d)
        if (x[d] < -1e-12 || x[d] > 1.0 + 1e-12) throw DomainError("pcm: point outside the unit cube");
    int k = partition_.locate(x);
    if (k < 0) throw DomainError("pcm: point not covered by the partition");
    return eval_in(static_cast<std::size_t>(k), x);
}

nlohmann::json PiecewiseCongruentMap::to_json() const {
    nlohmann::json part = nlohmann::json::array(), cells = nlohmann::json::array();
    for (const auto& s : partition_.simplices()) {
        nlohmann::json vs = nlohmann::json::array();
        for (const auto& v : s.vertices) vs.push_back(vec_to_json(v));
        part.push_back(vs);
    }
    for (const auto& c : cells_) {
        nlohmann::json A = nlohmann::json::array();
        for (Index r = 0; r < c.A.rows(); ++r)
            for (Index k = 0; k < c.A.cols(); ++k) A.push_back(c.A(r, k));
        cells.push_back({{"A", A}, {"b", vec_to_json(c.b)}});
    }
    return {{"name", name_}, {"n", dim()}, {"m", codim()}, {"partition", part}, {"cells", cells}};
}

PiecewiseCongruentMap PiecewiseCongruentMap::from_json(const nlohmann::json& j) {
    try {
        int n = j.at("n").get<int>();
        int m = j.at("m").get<int>();
        std::vector<Simplex> simplices;
        for (const auto& s : j.at("partition")) {
            Simplex sx;
            for (const auto& v : s) sx.vertices.push_back(vec_from_json(v));
            simplices.push_back(sx);
        }
        std::vector<AffineCell> cells;
        for (const auto& c : j.at("cells")) {
            auto a = c.at("A").get<std::vector<double>>();
            if (a.size() != static_cast<std::size_t>(n * m)) throw ArgumentError("pcm: matrix size mismatch");
            AffineCell cell{Mat(m, n), vec_from_json(c.at("b"))};
            for (int r = 0; r < m; ++r)
                for (int k = 0; k < n; ++k) cell.A(r, k) = a[static_cast<std::size_t>(r * n + k)];
            cells.push_back(cell);
        }
        return PiecewiseCongruentMap(SimplicialPartition(n, std::move(simplices)), std::move(cells),
                                     j.value("name", std::string()));
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(std::string("pcm: ") + e.what());
    }
}

PiecewiseCongruentMap pcm_affine(const Mat& A, const Vec& b) {
    auto part = SimplicialPartition::kuhn(static_cast<int>(A.cols()));
    std::vector<AffineCell> cells(part.size(), AffineCell{A, b});
    return PiecewiseCongruentMap(std::move(part), std::move(cells), "affine");
}

PiecewiseCongruentMap pcm_identity(int n) {
    auto f = pcm_affine(Mat::Identity(n, n), Vec::Zero(n));
    return PiecewiseCongruentMap(f.partition(), f.cells(), "identity" + std::to_string(n));
}

PiecewiseCongruentMap pcm_path(const std::vector<double>& breaks, const std::vector<Vec>& velocities,
                               const Vec& start) {
    if (breaks.size() < 2 || velocities.size() + 1 != breaks.size())
        throw ValidationError("pcm path: need one velocity per interval");
    if (breaks.front() != 0.0 || breaks.back() != 1.0) throw ValidationError("pcm path: breaks must span [0,1]");
    std::vector<Simplex> simplices;
    std::vector<AffineCell> cells;
    Vec pos = start;
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        Vec u = velocities[k];
        if (std::abs(u.norm() - 1.0) > 1e-12) u.normalize();
        Simplex s;
        s.vertices = {Vec::Constant(1, breaks[k]), Vec::Constant(1, breaks[k + 1])};
        simplices.push_back(s);
        Mat A(u.size(), 1);
        A.col(0) = u;
        cells.push_back({A, pos - u * breaks[k]});
        pos += u * (breaks[k + 1] - breaks[k]);
    }
    return PiecewiseCongruentMap(SimplicialPartition(1, std::move(simplices)), std::move(cells), "path");
}

PiecewiseCongruentMap pcm_tent() {
    auto f = pcm_path({0.0, 0.5, 1.0}, {Vec::Constant(1, 1.0), Vec::Constant(1, -1.0)}, Vec::Zero(1));
    return PiecewiseCongruentMap(f.partition(), f.cells(), "tent");
}

PiecewiseCongruentMap pcm_folds(const std::vector<Fold>& folds, const Mat& A0, const Vec& b0) {
    struct Piece {
        Poly poly;
        Mat A;
        Vec b;
    };
    std::vector<Piece> pieces{{Poly{{0, 0}, {1, 0}, {1, 1}, {0, 1}}, A0, b0}};
    for (const auto& f : folds) {
        if (f.normal.size() != 2 || f.normal.norm() == 0.0) throw ValidationError("fold: bad normal");
        Vec a = f.normal.normalized();
        double c = f.offset / f.normal.norm();
        Mat R = Mat::Identity(2, 2) - 2.0 * a * a.transpose();
        std::vector<Piece> next;
        for (const auto& p : pieces) {
            Vec na = p.A.transpose() * a;
            Eigen::Vector2d n2(na[0], na[1]);
            double cc = c - a.dot(p.b);
            Poly keep = clip_halfplane(p.poly, n2, cc);
            Poly flip = clip_halfplane(p.poly, -n2, -cc);
            if (keep.size() >= 3 && std::abs(poly_area(keep)) > 1e-12) next.push_back({keep, p.A, p.b});
            if (flip.size() >= 3 && std::abs(poly_area(flip)) > 1e-12)
                next.push_back({flip, R * p.A, R * p.b + 2.0 * c * a});
        }
        pieces.swap(next);
    }
    std::vector<Simplex> simplices;
    std::vector<AffineCell> cells;
    for (const auto& p : pieces)
        for (std::size_t k = 1; k + 1 < p.poly.size(); ++k) {
            Poly tri{p.poly[0], p.poly[k], p.poly[k + 1]};
            if (std::abs(poly_area(tri)) < 1e-14) continue;
            Simplex s;
            for (const auto& v : tri) {
                Vec x(2);
                x << std::clamp(v.x(), 0.0, 1.0), std::clamp(v.y(), 0.0, 1.0);
                s.vertices.push_back(x);
            }
            simplices.push_back(s);
            cells.push_back({p.A, p.b});
        }
    return PiecewiseCongruentMap(SimplicialPartition(2, std::move(simplices)), std::move(cells), "folds");
}

PiecewiseCongruentMap pcm_postcompose(const PiecewiseCongruentMap& f, const Mat& Q, const Vec& c) {
    std::vector<AffineCell> cells;
    for (const auto& cell : f.cells()) cells.push_back({Q * cell.A, Q * cell.b + c});
    return PiecewiseCongruentMap(f.partition(), std::move(cells), f.name());
}

namespace {
Mat rotation2(double a) {
    Mat R(2, 2);
    R << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    return R;
}
}  // namespace

PiecewiseCongruentMap pcm_random(int n, std::mt19937_64& rng, int complexity) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    if (n == 1) {
        int K = 1 + static_cast<int>(U(rng) * complexity);
        std::vector<double> br{0.0};
        for (int k = 1; k < K; ++k) br.push_back(U(rng));
        br.push_back(1.0);
        std::sort(br.begin(), br.end());
        br.erase(std::unique(br.begin(), br.end(), [](double a, double b) { return b - a < 1e-3; }), br.end());
        br.back() = 1.0;
        std::vector<Vec> vel;
        for (std::size_t k = 0; k + 1 < br.size(); ++k) vel.push_back(Vec::Constant(1, U(rng) < 0.5 ? -1.0 : 1.0));
        return pcm_path(br, vel, Vec::Constant(1, U(rng)));
    }
    if (n == 2) {
        Mat A0 = rotation2(2.0 * M_PI * U(rng));
        if (U(rng) < 0.5) A0.col(0) *= -1.0;
        Vec b0(2);
        b0 << U(rng), U(rng);
        int K = 1 + static_cast<int>(U(rng) * complexity);
        std::vector<Fold> folds;
        for (int k = 0; k < K; ++k) {
            double a = 2.0 * M_PI * U(rng);
            Vec nrm(2);
            nrm << std::cos(a), std::sin(a);
            Vec through = A0 * Vec::Constant(2, 0.5) + b0 + 0.3 * Vec::Constant(2, U(rng) - 0.5);
            folds.push_back({nrm, nrm.dot(through)});
        }
        auto f = pcm_folds(folds, A0, b0);
        return PiecewiseCongruentMap(f.partition(), f.cells(), "random_folds");
    }
    std::normal_distribution<double> G(0.0, 1.0);
    Mat M(3, 3);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) M(r, c) = G(rng);
    Mat Q = M.householderQr().householderQ();
    Vec b(3);
    b << U(rng), U(rng), U(rng);
    auto f = pcm_affine(Q, b);
    return PiecewiseCongruentMap(f.partition(), f.cells(), "random_rigid");
}

std::vector<std::string> pcm_catalog_names() {
    return {"identity1", "identity2", "identity3", "tent", "rotation2", "fold_diagonal", "fold_cross", "zigzag"};
}

PiecewiseCongruentMap pcm_catalog(const std::string& name) {
    if (name == "identity1") return pcm_identity(1);
    if (name == "identity2") return pcm_identity(2);
    if (name == "identity3") return pcm_identity(3);
    if (name == "tent") return pcm_tent();
    if (name == "rotation2") {
        auto f = pcm_affine(rotation2(0.3), Vec::Zero(2));
        return PiecewiseCongruentMap(f.partition(), f.cells(), name);
    }
    if (name == "fold_diagonal") {
        Vec nrm(2);
        nrm << 1.0, -1.0;
        auto f = pcm_folds({{nrm, 0.0}});
        return PiecewiseCongruentMap(f.partition(), f.cells(), name);
    }
    if (name == "fold_cross") {
        Vec n1(2), n2(2);
        n1 << 1.0, 0.0;
        n2 << 0.0, 1.0;
        auto f = pcm_folds({{n1, 0.5}, {n2, 0.5}});
        return PiecewiseCongruentMap(f.partition(), f.cells(), name);
    }
    if (name == "zigzag") {
        std::vector<Vec> vel;
        for (int k = 0; k < 4; ++k) {
            Vec u(2);
            u << std::sqrt(0.5), (k % 2 ? -1.0 : 1.0) * std::sqrt(0.5);
            vel.push_back(u);
        }
        auto f = pcm_path({0.0, 0.25, 0.5, 0.75, 1.0}, vel, Vec::Zero(2));
        return PiecewiseCongruentMap(f.partition(), f.cells(), name);
    }
    throw ArgumentError("pcm: unknown catalog entry " + name);
}

double pcm_sup_distance(const PiecewiseCongruentMap& f, const PiecewiseCongruentMap& g, int samples_per_axis) {
    if (f.dim() != g.dim() || f.codim() != g.codim()) throw ArgumentError("pcm distance: shape mismatch");
    const int n = f.dim();
    double best = 0.0;
    auto probe = [&](const Vec& x) { best = std::max(best, (f.eval(x) - g.eval(x)).norm()); };
    for (const auto* m : {&f, &g})
        for (const auto& s : m->partition().simplices())
            for (const auto& v : s.vertices) probe(v);
    GridSet shape(n, samples_per_axis);
    for (Index i = 0; i < shape.size(); ++i) {
        Coord c = shape.coords(i);
        Vec x(n);
        for (int d = 0; d < n; ++d) x[d] = samples_per_axis > 1 ? double(c[d]) / (samples_per_axis - 1) : 0.5;
        probe(x);
    }
    return best;
}

XiReport xi_set(const PiecewiseCongruentMap& f, const Direction& e, double eps, int N, int octaves,
                double top_scale_cells) {
    const int n = f.dim();
    if (e.dim() != n) throw DomainError("xi: direction dimension mismatch");
    if (octaves < 1) throw DomainError("xi: need at least one octave");
    XiReport r;
    r.marked = GridSet(n, N, SetRole::Compact);
    r.tested = GridSet(n, N, SetRole::Compact);
    r.deviation.assign(static_cast<std::size_t>(r.marked.size()), -1.0);
    r.witness.assign(static_cast<std::size_t>(r.marked.size()), Vec::Zero(f.codim()));
    const double h = 1.0 / N;
    for (Index i = 0; i < r.marked.size(); ++i) {
        Vec x = r.marked.center(i);
        Vec fx = f.eval(x);
        std::vector<Vec> qs;
        for (int k = 0; k < octaves; ++k) {
            double t = top_scale_cells * h * std::ldexp(1.0, -k);
            for (double sg : {1.0, -1.0}) {
                Vec y = x + sg * t * e.vec();
                bool inside = true;
                for (int d = 0; d < n; ++d) inside = inside && y[d] >= 0.0 && y[d] <= 1.0;
                if (inside) qs.push_back((f.eval(y) - fx) / (sg * t));
            }
        }
        if (qs.empty()) {
            ++r.untested;
            continue;
        }
        r.tested.set(i);
        const int m = f.codim();
        Vec med(m), mid(m);
        for (int c = 0; c < m; ++c) {
            std::vector<double> col;
            for (const auto& q : qs) col.push_back(q[c]);
            std::sort(col.begin(), col.end());
            std::size_t s = col.size();
            med[c] = s % 2 ? col[s / 2] : 0.5 * (col[s / 2 - 1] + col[s / 2]);
            mid[c] = 0.5 * (col.front() + col.back());
        }
        auto dev_of = [&](const Vec& d) {
            double m2 = 0.0;
            for (const auto& q : qs) m2 = std::max(m2, (q - d).norm());
            return m2;
        };
        double d1 = dev_of(med), d2 = dev_of(mid);
        Vec best = d1 <= d2 ? med : mid;
        double dev = std::min(d1, d2);
        r.deviation[static_cast<std::size_t>(i)] = dev;
        r.witness[static_cast<std::size_t>(i)] = best;
        if (dev > eps + 1e-9) r.marked.set(i);
    }
    return r;
}

namespace {
double point_segment_distance(const Vec& x, const Vec& a, const Vec& b) {
    Vec d = b - a;
    double dd = d.squaredNorm();
    double t = dd > 0 ? std::clamp((x - a).dot(d) / dd, 0.0, 1.0) : 0.0;
    return (x - a - t * d).norm();
}

double point_face_distance(const Vec& x, const std::vector<Vec>& f) {
    if (f.size() == 1) return (x - f[0]).norm();
    if (f.size() == 2) return point_segment_distance(x, f[0], f[1]);
    Mat M(x.size(), 2);
    M.col(0) = f[1] - f[0];
    M.col(1) = f[2] - f[0];
    Eigen::Vector2d l = (M.transpose() * M).ldlt().solve(M.transpose() * (x - f[0]));
    if (l[0] >= 0 && l[1] >= 0 && l[0] + l[1] <= 1) return (x - f[0] - M * l).norm();
    return std::min({point_segment_distance(x, f[0], f[1]), point_segment_distance(x, f[1], f[2]),
                     point_segment_distance(x, f[0], f[2])});
}

bool face_is_null(const std::vector<Vec>& f, const Cone& cone) {
    if (f.size() == 1) return true;
    Mat M(f[0].size(), static_cast<Index>(f.size()) - 1);
    for (std::size_t k = 1; k < f.size(); ++k) M.col(static_cast<Index>(k) - 1) = f[k] - f[0];
    Eigen::HouseholderQR<Mat> qr(M);
    Mat Q = qr.householderQ() * Mat::Identity(M.rows(), M.cols());
    double proj = (Q.transpose() * cone.axis().vec()).norm();
    return proj <= 1.0 - cone.sigma();
}
}  // namespace

GridSet null_face_raster(const SimplicialPartition& p, const Cone& cone, int N, double dist) {
    const int n = p.dim();
    GridSet g(n, N, SetRole::Compact);
    for (const auto& s : p.simplices()) {
        int nv = n + 1;
        for (int mask = 1; mask < (1 << nv); ++mask) {
            int bits = __builtin_popcount(static_cast<unsigned>(mask));
            if (bits > n) continue;
            std::vector<Vec> face;
            for (int k = 0; k < nv; ++k)
                if (mask >> k & 1) face.push_back(s.vertices[static_cast<std::size_t>(k)]);
            if (!face_is_null(face, cone)) continue;
            Coord lo{0, 0, 0}, hi{1, 1, 1};
            for (int d = 0; d < n; ++d) {
                double a = 2.0, b = -1.0;
                for (const auto& v : face) {
                    a = std::min(a, v[d]);
                    b = std::max(b, v[d]);
                }
                lo[d] = std::max(0, static_cast<int>(std::floor((a - dist) * N)) - 1);
                hi[d] = std::min(N, static_cast<int>(std::ceil((b + dist) * N)) + 1);
            }
            for (int z = lo[2]; z < (n > 2 ? hi[2] : 1); ++z)
                for (int y = lo[1]; y < (n > 1 ? hi[1] : 1); ++y)
                    for (int x = lo[0]; x < hi[0]; ++x) {
                        Coord c{x, y, z};
                        Index idx = g.index(c);
                        if (g.test(idx)) continue;
                        if (point_face_distance(g.center(c), face) <= dist + 1e-12) g.set(idx);
                    }
        }
    }
    return g;
}

}  // namespace cw
