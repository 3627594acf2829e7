#pragma once

#include <Eigen/Dense>
#include <json.hpp>
#include <string>
#include <vector>

namespace cw {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Unit vector in R^n.
class Direction {
public:
    Direction() = default;
    // Normalizes v; throws DomainError on a zero or non-finite vector.
    explicit Direction(const Vec& v);

    const Vec& vec() const { return v_; }
    int dim() const { return static_cast<int>(v_.size()); }
    double operator[](int i) const { return v_[i]; }

    static Direction axis(int n, int i);

private:
    Vec v_;
};

// Open cone {x : <x,e> > (1 - sigma)|x|}.
class Cone {
public:
    Cone() = default;
    Cone(const Direction& axis, double sigma);

    const Direction& axis() const { return axis_; }
    double sigma() const { return sigma_; }
    int dim() const { return axis_.dim(); }

private:
    Direction axis_;
    double sigma_ = 0.0;
};

// Tangent of the half-opening angle: sqrt(2s - s^2) / (1 - s).
double beta(double sigma);

bool cone_contains(const Cone& cone, const Vec& x);

// Same test with an additive slack, used by validation.
bool cone_contains_slack(const Cone& cone, const Vec& x, double slack);

// Polyline whose every chord lies in the cone.
class ConeCurve {
public:
    ConeCurve(std::vector<Vec> vertices, const Cone& cone);

    const std::vector<Vec>& vertices() const { return vertices_; }
    const Cone& cone() const { return cone_; }
    int dim() const { return cone_.dim(); }

    nlohmann::json to_json() const;
    static ConeCurve from_json(const nlohmann::json& j, const Cone& cone);

private:
    std::vector<Vec> vertices_;
    Cone cone_;
};

// s -> s e + eta(s) on [0, T], eta piecewise affine.
class CanonicalCurve {
public:
    CanonicalCurve(const Cone& cone, std::vector<double> s, std::vector<Vec> eta);

    const Cone& cone() const { return cone_; }
    double T() const { return s_.back(); }
    const std::vector<double>& breaks() const { return s_; }
    const std::vector<Vec>& offsets() const { return eta_; }
    int dim() const { return cone_.dim(); }

    Vec point(double s) const;
    Vec vertex(std::size_t k) const;
    std::size_t size() const { return s_.size(); }

    nlohmann::json to_json() const;

private:
    Cone cone_;
    std::vector<double> s_;
    std::vector<Vec> eta_;
};

CanonicalCurve canonicalize(const ConeCurve& curve, const Cone& cone);

double curve_arc_length(const CanonicalCurve& c);
double curve_arc_length(const ConeCurve& c);

nlohmann::json vec_to_json(const Vec& v);
Vec vec_from_json(const nlohmann::json& j);

}  // namespace cw
