#pragma once

#include "kwc/grid.hpp"
#include "kwc/potential.hpp"
#include "kwc/setvalued.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace kwc {

struct EnergyReport {
    double dirichlet = 0.0;
    double potential = 0.0;
    double weighted_tv = 0.0;
    double jump_term = 0.0;
    double fidelity = 0.0;
    double total = 0.0;
    // Echoed parameters; zero when not applicable.
    double epsilon = 0.0;
    double lambda = 0.0;
    double h = 0.0;

    void sum() { total = dirichlet + potential + weighted_tv + jump_term + fidelity; }
    void write(std::ostream& os) const;  // key=value lines
    static std::string csv_header();
    std::string csv_row() const;
};

/// A jump facet: a point in 1D (a == b, measure 1) or an axis-aligned face in 2D.
struct JumpFacet {
    Point2 a;
    Point2 b;
    double size = 0.0;      // j = |u+ - u-|
    double u_minus = 0.0;
    double u_plus = 0.0;
    double measure = 1.0;   // H^{N-1} measure carried by the facet
};

struct JumpTriplet {
    int dims = 1;
    std::vector<JumpFacet> facets;
    WeightSpec weight = WeightSpec::quadratic();

    static JumpTriplet points(std::vector<double> t, std::vector<double> sizes, WeightSpec weight);
    static JumpTriplet segments(std::vector<Segment> segs, std::vector<double> sizes, WeightSpec weight);
};

EnergyReport e_sMM(const GridField& v, double eps, const PotentialSpec& pot);

/// Face weights min(w_lo, w_hi) in the order of faces(g).
std::vector<double> face_weights(const GridField& w);

/// Anisotropic sum of face weight * |forward difference| * h^(N-1).
double weighted_tv(const GridField& u, const GridField& w);
double total_variation(const GridField& u);

EnergyReport e_KWC(const GridField& u, const GridField& v, double eps, const PotentialSpec& pot,
                   const WeightSpec& weight);

// E^eps_sMM plus the jump integral of alpha(v) j along J (midpoint rule,
// 32 nodes per facet in 2D).
double e_sMM_J(const GridField& v, double eps, const PotentialSpec& pot, const JumpTriplet& triplet);

double e0_sMM(const SlicedLimit1D& limit, const PotentialSpec& pot);
double e0_sMM(const Limit2D& limit, const PotentialSpec& pot);

// Facets within match_tol of the singular set pay min alpha over [xi-, xi+].
double e0_sMM_J(const SlicedLimit1D& limit, const JumpTriplet& triplet, const PotentialSpec& pot,
                double match_tol = 1e-9);
double e0_sMM_J(const Limit2D& limit, const JumpTriplet& triplet, const PotentialSpec& pot,
                double match_tol = 1e-9);

/// Threshold used when none is configured: max(10 * median |du|, 0.05 * range(u)).
double default_jump_threshold(const GridField& u);

/// Faces whose difference exceeds the threshold, as facets (1D: face midpoints).
JumpTriplet approximate_jumps(const GridField& u, double jump_threshold);

// Detected jumps are matched to the singular set within h/2.
EnergyReport e0_KWC(const GridField& u, const SlicedLimit1D& limit, const PotentialSpec& pot,
                    const WeightSpec& weight, double jump_threshold);
EnergyReport e0_KWC(const GridField& u, const Limit2D& limit, const PotentialSpec& pot,
                    const WeightSpec& weight, double jump_threshold);

double tv_KWC(const GridField& u, const PotentialSpec& pot, const WeightSpec& weight, double jump_threshold);

double fidelity(const GridField& u, const GridField& f, double lambda);

} // namespace kwc
