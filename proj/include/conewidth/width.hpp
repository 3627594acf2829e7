#pragma once

#include <optional>
#include <string>
#include <vector>

#include "conewidth/grid_set.hpp"

namespace cw {

inline constexpr int kMinStencilRadius = 2;
inline constexpr int kMaxStencilRadius = 32;

// Portion of a stencil segment lying in one cell, relative to its start node.
struct StencilPiece {
    Coord cell;
    Index offset = 0;
    double length = 0.0;
};

struct StencilEdge {
    Coord step;
    double length = 0.0;
    std::vector<StencilPiece> pieces;
};

// Integer offsets o with |o|_inf <= r strictly inside the cone, together with
// the exact cell decomposition of the segment from a node to node + o.
std::vector<StencilEdge> cone_stencil(int dim, int N, const Cone& cone, int radius);

class ConeGraph {
public:
    ConeGraph(int dim, int N, const Cone& cone, int radius);

    int dim() const { return dim_; }
    int N() const { return N_; }
    int radius() const { return radius_; }
    const Cone& cone() const { return cone_; }
    const std::vector<StencilEdge>& stencil() const { return stencil_; }
    // Node indices sorted by projection onto the axis.
    const std::vector<Index>& order() const { return order_; }
    Index node_count() const { return static_cast<Index>(order_.size()); }

private:
    int dim_, N_, radius_;
    Cone cone_;
    std::vector<StencilEdge> stencil_;
    std::vector<Index> order_;
};

ConeGraph build_cone_graph(int dim, int N, const Cone& cone, int radius);

struct PathResult {
    double value = 0.0;
    std::vector<Index> nodes;
    // Best in-set length over paths ending at each node.
    std::vector<double> node_values;
};

// Longest maximal path, edge weight = length inside the set.
PathResult longest_path(const ConeGraph& g, const GridSet& set, bool keep_node_values = false);

std::optional<ConeCurve> path_to_curve(const ConeGraph& g, const std::vector<Index>& nodes);

struct WidthReport {
    int dim = 0;
    int N = 0;
    double sigma = 0.0;
    Vec axis;
    int radius = 0;
    std::vector<double> deltas;
    std::vector<double> sup_values;
    double width = 0.0;
    std::optional<ConeCurve> witness;
    std::vector<Index> witness_nodes;

    std::string to_csv() const;
    nlohmann::json to_json() const;
};

// Halving schedule from delta0 down to at least floor_cells grid cells.
std::vector<double> default_schedule(int N, double delta0 = 0.125, double floor_cells = 2.0);

WidthReport estimate_width(const GridSet& set, const Cone& cone, const std::vector<double>& schedule,
                           int radius, bool want_witness = true);
WidthReport estimate_width(const GridSet& set, const ConeGraph& g, const std::vector<double>& schedule,
                           bool want_witness = true);

// Sup over maximal graph paths ending at x + s e of (in-set length - s).
SampledField width_function(const GridSet& omega, const Cone& cone, int radius);
SampledField width_function(const GridSet& omega, const ConeGraph& g);

enum class Verdict { Positive, NotPositive, Inconclusive };
std::string to_string(Verdict v);

struct DifferenceResult {
    Verdict verdict = Verdict::Inconclusive;
    double width_a = 0.0;
    double width_e = 0.0;
    double width_diff = 0.0;
    double margin = 0.0;
    double tolerance = 0.0;
};

DifferenceResult width_difference_positive(const GridSet& a, const GridSet& e, const Cone& cone,
                                           const std::vector<double>& schedule, int radius);

struct SubconeResult {
    std::optional<Direction> direction;
    double width = 0.0;
    double tolerance = 0.0;
    int tried = 0;
};

// Directions e' inside C(e, sigma) on a net of chord
// spacing sigma'/2, nearest to e first.
std::vector<Direction> subcone_net(const Cone& cone, double sigma_prime);
SubconeResult subcone_search(const GridSet& set, const Cone& cone, double sigma_prime,
                             const std::vector<double>& schedule, int radius);

struct SweepRow {
    Direction direction;
    WidthReport report;
};

std::vector<Direction> sweep_directions(int dim, int count);
std::vector<SweepRow> uniform_sweep(const GridSet& set, const std::vector<Direction>& dirs, double sigma,
                                    const std::vector<double>& schedule, int radius, int workers = 1);
std::string sweep_csv(const std::vector<SweepRow>& rows);

// The grid resolution allowance used by width comparisons.
double grid_tolerance(double h, double sigma);

}  // namespace cw
