#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "conewidth/geometry.hpp"

namespace cw {

using Index = std::int64_t;
using Coord = std::array<int, 3>;

// Upper bound on N^n for any grid.
inline constexpr Index kMaxCells = Index(1) << 26;

enum class SetRole { Compact, Open };

// Binary mask on the N^n uniform grid of [0,1]^n. Cell i is the open box
// (i h, (i+1) h) with node at its center. Index layout is x fastest.
class GridSet {
public:
    GridSet() = default;
    GridSet(int dim, int N, SetRole role = SetRole::Compact, int k0 = 0);

    int dim() const { return dim_; }
    int N() const { return N_; }
    int k0() const { return k0_; }
    SetRole role() const { return role_; }
    double h() const { return 1.0 / N_; }
    Index size() const { return static_cast<Index>(mask_.size()); }

    void set_role(SetRole r) { role_ = r; }
    void set_k0(int k0) { k0_ = k0; }

    Index index(const Coord& c) const;
    Coord coords(Index idx) const;
    bool in_range(const Coord& c) const;
    Vec center(Index idx) const;
    Vec center(const Coord& c) const;

    bool test(Index idx) const { return mask_[static_cast<std::size_t>(idx)] != 0; }
    bool test(const Coord& c) const { return in_range(c) && test(index(c)); }
    void set(Index idx, bool v = true) { mask_[static_cast<std::size_t>(idx)] = v ? 1 : 0; }

    const std::vector<std::uint8_t>& mask() const { return mask_; }
    std::vector<std::uint8_t>& mask() { return mask_; }

    Index count() const;
    bool empty() const { return count() == 0; }
    // Fewest cells between an occupied cell and the outside of the cube.
    int margin_layers() const;
    bool is_compactly_interior() const { return margin_layers() >= 1; }

    // Cell containing the point, or -1 outside [0,1)^n.
    Index locate(const Vec& x) const;

    GridSet set_union(const GridSet& o) const;
    GridSet set_difference(const GridSet& o) const;
    bool subset_of(const GridSet& o) const;
    bool operator==(const GridSet& o) const;

private:
    int dim_ = 0;
    int N_ = 0;
    int k0_ = 0;
    SetRole role_ = SetRole::Compact;
    std::vector<std::uint8_t> mask_;
};

Index grid_cell_count(int dim, int N);

// Scalar field sampled at the nodes, evaluated off-node by multilinear
// interpolation (clamped to the node hull).
class SampledField {
public:
    SampledField() = default;
    SampledField(int dim, int N, std::vector<double> values);

    int dim() const { return dim_; }
    int N() const { return N_; }
    double h() const { return 1.0 / N_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    double at(Index idx) const { return values_[static_cast<std::size_t>(idx)]; }

    double eval(const Vec& x) const;
    Vec gradient(const Vec& x) const;
    double max_abs() const;

private:
    int dim_ = 0;
    int N_ = 0;
    std::vector<double> values_;
};

struct IfsSpec {
    double ratio = 0.25;
    std::vector<Vec> offsets;
    int depth = 0;

    void validate() const;
    static IfsSpec four_corner(int depth);
};

// Minimal N aligning depth-level boxes after rescaling into [1/k0, 1-1/k0]^n
// (k0 = 0 means no rescaling).
int ifs_min_resolution(const IfsSpec& spec, int k0);
GridSet generate_ifs(const IfsSpec& spec, int k0, int N);
GridSet four_corner_cantor(int depth, int k0 = 0, int N = 0);

// Squared distance (in cell units) from each node to the nearest occupied node.
std::vector<double> squared_distance_transform(const GridSet& s);

GridSet dilate(const GridSet& s, double delta);

// Lipschitz cutoff: 1 on omega, 0 at distance >= margin/2.
SampledField build_cutoff(const GridSet& omega, double margin);

double curve_set_intersection_length(const GridSet& s, const CanonicalCurve& c);
double polyline_set_intersection_length(const GridSet& s, const std::vector<Vec>& vertices);

// Rasterization helpers.
GridSet rasterize_segment(int N, const Vec& a, const Vec& b, double thickness = 0.0);
GridSet axis_box(int dim, int N, const Coord& lo, const Coord& hi);
// Same cells on a grid with pad extra layers on every side (same h).
GridSet pad_grid_set(const GridSet& s, int pad);

void write_grid_set(std::ostream& os, const GridSet& s);
GridSet read_grid_set(std::istream& is);
void save_grid_set(const std::string& path, const GridSet& s);
GridSet load_grid_set(const std::string& path);
nlohmann::json grid_set_to_json(const GridSet& s);
GridSet grid_set_from_json(const nlohmann::json& j);

void write_field_csv(std::ostream& os, const SampledField& f);

}  // namespace cw
