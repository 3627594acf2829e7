#pragma once

#include <vector>

#include "conewidth/pcm.hpp"

namespace cw {

// Non-negative step function on [breaks.front(), breaks.back()].
struct StepSignal {
    std::vector<double> breaks;
    std::vector<double> values;

    void validate() const;
    double lp_pow(double p) const;
    double sup() const;
};

// Uncentred maximal function sup over open J containing t of the mean on J.
double maximal_at(const StepSignal& s, double t);

// Integral of (M s)^p, exact envelope decomposition.
double maximal_lp_pow(const StepSignal& s, double p);

// (5 p 2^(p-1) / (p-1)), the p-th power of the maximal operator bound.
double maximal_constant_pow(double p);

// |d/ds (f - g)(curve(s))| as a step function in the axis parameter.
StepSignal difference_speed(const PiecewiseCongruentMap& f, const PiecewiseCongruentMap& g,
                            const CanonicalCurve& curve);

struct CurveBoundResult {
    double lhs = 0.0;
    double rhs = 0.0;
    double sup_distance = 0.0;
    std::size_t pieces = 0;
    bool holds() const { return lhs <= rhs; }
};

// Integral of (M_gamma (f - g))^p against the congruent-map bound.
CurveBoundResult curve_maximal_bound(const PiecewiseCongruentMap& f, const PiecewiseCongruentMap& g,
                                     const CanonicalCurve& curve, double p, double sup_distance);

struct DivergenceReport {
    GridSet marked;
    int k0 = 0;
    std::vector<double> witness;  // chosen t per node, 0 where unmarked
    std::vector<double> ladder;
};

// Nodes of [1/(2 k0), 1 - 1/(2 k0)]^n where some dyadic t gives
// |(f - g)(x + t e) - (f - g)(x)| >= eps |t|.
DivergenceReport divergence_set(const PiecewiseCongruentMap& f, const PiecewiseCongruentMap& g, const Direction& e,
                                double eps, int k0, int N, int finest_octave = -1);

// Cells inside the open cube (a, 1 - a)^n.
GridSet restrict_to_inset(const GridSet& s, double a);

// Largest |f - g| distance for which the divergence bound applies.
double divergence_diameter_budget(int n, std::size_t card, double eps, double omega);

struct StabilityResult {
    std::size_t pairs = 0;
    std::size_t failures = 0;
    double worst_ratio = 0.0;  // min |F(w)-F(z)| / (eps/2 |z-w|)
};

// Quotient-stability check around witnessed pairs (x, x + t e).
StabilityResult quotient_stability(const PiecewiseCongruentMap& f, const PiecewiseCongruentMap& g,
                                   const DivergenceReport& rep, const Direction& e, double eps, int samples_per_pair,
                                   unsigned long long seed);

}  // namespace cw
