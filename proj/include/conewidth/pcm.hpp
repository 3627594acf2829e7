#pragma once

#include <random>
#include <string>
#include <vector>

#include "conewidth/grid_set.hpp"

namespace cw {

struct Simplex {
    std::vector<Vec> vertices;  // n + 1 points in R^n

    double volume() const;
    // Barycentric coordinates of x.
    Vec barycentric(const Vec& x) const;
    bool contains(const Vec& x, double tol = 1e-12) const;
};

class SimplicialPartition {
public:
    SimplicialPartition() = default;
    SimplicialPartition(int dim, std::vector<Simplex> simplices);

    int dim() const { return dim_; }
    std::size_t size() const { return simplices_.size(); }
    const Simplex& operator[](std::size_t i) const { return simplices_[i]; }
    const std::vector<Simplex>& simplices() const { return simplices_; }

    // Index of a simplex containing x, -1 if none.
    int locate(const Vec& x) const;

    // Kuhn triangulation of [0,1]^n into n! simplices.
    static SimplicialPartition kuhn(int dim);

private:
    int dim_ = 0;
    std::vector<Simplex> simplices_;
    std::vector<Mat> inverse_;
};

struct AffineCell {
    Mat A;  // m x n with orthonormal columns
    Vec b;
};

// Continuous map of [0,1]^n into R^m, affine isometric on each simplex.
class PiecewiseCongruentMap {
public:
    PiecewiseCongruentMap(SimplicialPartition partition, std::vector<AffineCell> cells, std::string name = "");

    int dim() const { return partition_.dim(); }
    int codim() const { return static_cast<int>(cells_.front().b.size()); }
    std::size_t cell_count() const { return cells_.size(); }
    const SimplicialPartition& partition() const { return partition_; }
    const std::vector<AffineCell>& cells() const { return cells_; }
    const std::string& name() const { return name_; }

    Vec eval(const Vec& x) const;
    Vec eval_in(std::size_t cell, const Vec& x) const { return cells_[cell].A * x + cells_[cell].b; }

    nlohmann::json to_json() const;
    static PiecewiseCongruentMap from_json(const nlohmann::json& j);

private:
    SimplicialPartition partition_;
    std::vector<AffineCell> cells_;
    std::string name_;
};

// Builders. Every builder yields a validated map.
PiecewiseCongruentMap pcm_identity(int n);
PiecewiseCongruentMap pcm_affine(const Mat& A, const Vec& b);
PiecewiseCongruentMap pcm_tent();
// 1-D map with f(0) = start and unit velocity u_k on (x_k, x_{k+1}).
PiecewiseCongruentMap pcm_path(const std::vector<double>& breaks, const std::vector<Vec>& velocities,
                               const Vec& start);

// A reflection y -> y - 2 (<a,y> - c) a applied where <a,y> > c.
struct Fold {
    Vec normal;
    double offset = 0.0;
};

// Planar map obtained by folding the image of base along each line in turn.
PiecewiseCongruentMap pcm_folds(const std::vector<Fold>& folds, const Mat& A0 = Mat::Identity(2, 2),
                                const Vec& b0 = Vec::Zero(2));

PiecewiseCongruentMap pcm_random(int n, std::mt19937_64& rng, int complexity = 3);
std::vector<std::string> pcm_catalog_names();
PiecewiseCongruentMap pcm_catalog(const std::string& name);

// Composition with a rigid motion of the target, y -> Q y + c.
PiecewiseCongruentMap pcm_postcompose(const PiecewiseCongruentMap& f, const Mat& Q, const Vec& c);

// Conservative estimate of sup |f - g| over samples and vertices.
double pcm_sup_distance(const PiecewiseCongruentMap& f, const PiecewiseCongruentMap& g, int samples_per_axis = 65);

struct XiReport {
    GridSet marked;
    GridSet tested;
    std::vector<double> deviation;  // per node, -1 if untested
    std::vector<Vec> witness;       // per node candidate derivative
    Index untested = 0;
};

// Nodes where no eps-derivative along e is found on a dyadic ladder.
XiReport xi_set(const PiecewiseCongruentMap& f, const Direction& e, double eps, int N, int octaves = 6,
                double top_scale_cells = 1.0);

// Cells within dist of the faces of the partition whose direction space
// meets the closed cone (the cone-null faces) and of all vertices.
GridSet null_face_raster(const SimplicialPartition& p, const Cone& cone, int N, double dist);

}  // namespace cw
