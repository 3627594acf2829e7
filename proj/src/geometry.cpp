#include "conewidth/geometry.hpp"

#include <cmath>
#include <sstream>

#include "conewidth/errors.hpp"

namespace cw {

Direction::Direction(const Vec& v) {
    if (v.size() == 0) throw DomainError("direction: empty vector");
    double nrm = v.norm();
    if (!std::isfinite(nrm) || nrm == 0.0) throw DomainError("direction: zero or non-finite vector");
    v_ = v / nrm;
}

Direction Direction::axis(int n, int i) {
    if (i < 0 || i >= n) throw DomainError("direction: axis index out of range");
    Vec v = Vec::Zero(n);
    v[i] = 1.0;
    return Direction(v);
}

Cone::Cone(const Direction& axis, double sigma) : axis_(axis), sigma_(sigma) {
    if (!(sigma > 0.0 && sigma < 1.0)) throw DomainError("cone: sigma must lie in (0,1)");
    if (axis.dim() == 0) throw DomainError("cone: axis is empty");
}

double beta(double sigma) {
    if (!(sigma > 0.0 && sigma < 1.0)) throw DomainError("beta: sigma must lie in (0,1)");
    return std::sqrt(2.0 * sigma - sigma * sigma) / (1.0 - sigma);
}

bool cone_contains(const Cone& cone, const Vec& x) {
    return cone_contains_slack(cone, x, 0.0);
}

bool cone_contains_slack(const Cone& cone, const Vec& x, double slack) {
    if (x.size() != cone.dim()) throw DomainError("cone: dimension mismatch");
    double nrm = x.norm();
    if (nrm == 0.0) return false;
    return x.dot(cone.axis().vec()) > (1.0 - cone.sigma()) * nrm - slack;
}

namespace {
constexpr double kCurveSlack = 1e-12;

std::string fmt_vec(const Vec& v) {
    std::ostringstream os;
    os.precision(17);
    os << "(";
    for (int i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << ")";
    return os.str();
}
}  // namespace

ConeCurve::ConeCurve(std::vector<Vec> vertices, const Cone& cone)
    : vertices_(std::move(vertices)), cone_(cone) {
    if (vertices_.size() < 2) throw ValidationError("curve: needs at least two vertices");
    for (const auto& v : vertices_)
        if (v.size() != cone_.dim()) throw ValidationError("curve: vertex dimension mismatch");
    // The cone is convex, so checking consecutive chords covers every chord.
    for (std::size_t k = 0; k + 1 < vertices_.size(); ++k) {
        Vec d = vertices_[k + 1] - vertices_[k];
        if (d.norm() == 0.0)
            throw ValidationError("curve: repeated vertex at index " + std::to_string(k));
        if (!cone_contains_slack(cone_, d, kCurveSlack))
            throw ValidationError("curve: chord " + std::to_string(k) + "->" + std::to_string(k + 1) +
                                  " " + fmt_vec(vertices_[k]) + " -> " + fmt_vec(vertices_[k + 1]) +
                                  " leaves the cone");
    }
}

nlohmann::json ConeCurve::to_json() const {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& v : vertices_) a.push_back(vec_to_json(v));
    return a;
}

ConeCurve ConeCurve::from_json(const nlohmann::json& j, const Cone& cone) {
    if (!j.is_array()) throw ArgumentError("curve: expected an array of vertices");
    std::vector<Vec> vs;
    for (const auto& e : j) vs.push_back(vec_from_json(e));
    return ConeCurve(std::move(vs), cone);
}

CanonicalCurve::CanonicalCurve(const Cone& cone, std::vector<double> s, std::vector<Vec> eta)
    : cone_(cone), s_(std::move(s)), eta_(std::move(eta)) {
    if (s_.size() < 2 || s_.size() != eta_.size()) throw ValidationError("canonical curve: bad breakpoints");
    if (s_.front() != 0.0) throw ValidationError("canonical curve: must start at s = 0");
    for (std::size_t k = 0; k + 1 < s_.size(); ++k)
        if (!(s_[k + 1] > s_[k])) throw ValidationError("canonical curve: breakpoints not increasing");
}

Vec CanonicalCurve::vertex(std::size_t k) const { return s_[k] * cone_.axis().vec() + eta_[k]; }

Vec CanonicalCurve::point(double s) const {
    if (s <= s_.front()) return vertex(0);
    if (s >= s_.back()) return vertex(s_.size() - 1);
    auto it = std::upper_bound(s_.begin(), s_.end(), s);
    std::size_t k = static_cast<std::size_t>(it - s_.begin()) - 1;
    double a = (s - s_[k]) / (s_[k + 1] - s_[k]);
    Vec eta = (1.0 - a) * eta_[k] + a * eta_[k + 1];
    return s * cone_.axis().vec() + eta;
}

nlohmann::json CanonicalCurve::to_json() const {
    nlohmann::json bp = nlohmann::json::array();
    for (std::size_t k = 0; k < s_.size(); ++k) {
        nlohmann::json row = nlohmann::json::array();
        row.push_back(s_[k]);
        for (int i = 0; i < eta_[k].size(); ++i) row.push_back(eta_[k][i]);
        bp.push_back(row);
    }
    return {{"axis", vec_to_json(cone_.axis().vec())}, {"sigma", cone_.sigma()}, {"T", T()}, {"breakpoints", bp}};
}

CanonicalCurve canonicalize(const ConeCurve& curve, const Cone& cone) {
    // Re-validate against the requested cone.
    ConeCurve checked(curve.vertices(), cone);
    const Vec& e = cone.axis().vec();
    const auto& vs = checked.vertices();
    std::vector<double> s;
    std::vector<Vec> eta;
    s.reserve(vs.size());
    eta.reserve(vs.size());
    double acc = 0.0;
    s.push_back(0.0);
    eta.push_back(vs[0]);
    for (std::size_t k = 1; k < vs.size(); ++k) {
        Vec d = vs[k] - vs[k - 1];
        double ds = d.dot(e);
        acc += ds;
        s.push_back(acc);
        // Offsets move only in the orthogonal complement of e.
        eta.push_back(eta.back() + (d - ds * e));
    }
    return CanonicalCurve(cone, std::move(s), std::move(eta));
}

double curve_arc_length(const CanonicalCurve& c) {
    double L = 0.0;
    for (std::size_t k = 0; k + 1 < c.size(); ++k) {
        double ds = c.breaks()[k + 1] - c.breaks()[k];
        double de = (c.offsets()[k + 1] - c.offsets()[k]).squaredNorm();
        L += std::sqrt(ds * ds + de);
    }
    return L;
}

double curve_arc_length(const ConeCurve& c) {
    double L = 0.0;
    for (std::size_t k = 0; k + 1 < c.vertices().size(); ++k) L += (c.vertices()[k + 1] - c.vertices()[k]).norm();
    return L;
}

nlohmann::json vec_to_json(const Vec& v) {
    nlohmann::json a = nlohmann::json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Vec vec_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw ArgumentError("expected a numeric array");
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    return v;
}

}  // namespace cw
