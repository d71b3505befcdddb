#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace kwc {

/// Result of the pointwise assumption checks on a sample grid.
struct AssumptionReport {
    bool f1_ok = false;       // F >= 0 and F(v) = 0 only at v = 1
    bool f2_ok = false;       // F bounded away from zero far from the well
    bool f2prime_ok = false;  // F'(v)(v - 1) >= 0
    double worst_violation = 0.0;
};

/// Single-well potential F with its derivative.
///
/// Assumption flags are always computed from samples on construction; a
/// tabulated potential is interpolated by a monotone piecewise cubic.
class PotentialSpec {
public:
    enum class Kind { quadratic, quartic, custom, tabulated };
    using Fn = std::function<double(double)>;

    static PotentialSpec quadratic();
    static PotentialSpec quartic();
    static PotentialSpec custom(std::string name, Fn f, Fn df);
    static PotentialSpec tabulated(std::vector<double> v, std::vector<double> f);
    static PotentialSpec from_table_file(const std::string& path);

    Kind kind() const noexcept { return kind_; }
    const std::string& name() const noexcept { return name_; }

    double operator()(double v) const { return f_(v); }
    double deriv(double v) const { return df_(v); }

    bool satisfies_f1() const noexcept { return flags_.f1_ok; }
    bool satisfies_f2() const noexcept { return flags_.f2_ok; }
    bool satisfies_f2prime() const noexcept { return flags_.f2prime_ok; }
    const AssumptionReport& flags() const noexcept { return flags_; }

private:
    PotentialSpec(Kind kind, std::string name, Fn f, Fn df);

    Kind kind_;
    std::string name_;
    Fn f_;
    Fn df_;
    AssumptionReport flags_;
};

/// Jump weight alpha(v) >= 0.
class WeightSpec {
public:
    enum class Kind { quadratic, shifted, custom };
    using Fn = std::function<double(double)>;

    static WeightSpec quadratic();
    static WeightSpec shifted(double offset);
    // Without a derivative, deriv() falls back to central differences.
    static WeightSpec custom(std::string name, Fn alpha, Fn dalpha = {});
    // Piecewise-linear interpolation of (v, alpha) pairs, constant outside.
    static WeightSpec tabulated(std::vector<double> v, std::vector<double> a);

    Kind kind() const noexcept { return kind_; }
    const std::string& name() const noexcept { return name_; }
    double offset() const noexcept { return offset_; }

    double operator()(double v) const { return a_(v); }
    double deriv(double v) const;

    // v^2 or v^2 + offset: the v-subproblem is then a linear SPD system.
    bool is_quadratic_family() const noexcept { return kind_ != Kind::custom; }

private:
    WeightSpec(Kind kind, std::string name, Fn a, Fn da, double offset);

    Kind kind_;
    std::string name_;
    Fn a_;
    Fn da_;
    double offset_ = 0.0;
};

AssumptionReport check_assumptions(const PotentialSpec& spec, std::span<const double> sample_grid);

/// |integral_1^sigma sqrt(F)|, adaptive Gauss-Kronrod split at the well.
double G(const PotentialSpec& spec, double sigma);

struct AlphaMin {
    double eta;
    double value;
};

/// Minimum of alpha over [xi_minus, xi_plus]; ties go to the smallest argument.
AlphaMin alpha_min(const WeightSpec& weight, double xi_minus, double xi_plus);

struct JumpCost {
    double value;
    double xi_minus;
    double xi_plus;
    double eta;  // minimizer of alpha over [xi_minus, xi_plus]
};

/// Relaxed jump cost sigma(r) for a fixed (weight, potential) pair.
///
/// The outer minimization over xi_minus (and xi_plus when alpha is not
/// monotone above the well) is tabulated once on construction; evaluate()
/// then runs a grid search over the table followed by a local golden-section
/// refinement. Immutable after construction.
class JumpCostTable {
public:
    JumpCostTable(const WeightSpec& weight, const PotentialSpec& pot, double xi_span = 10.0,
                  std::size_t nodes = 4001);

    JumpCost evaluate(double r) const;
    bool one_sided() const noexcept { return one_sided_; }

private:
    double objective_one_sided(double r, double xi_minus) const;

    std::shared_ptr<const WeightSpec> weight_;
    std::shared_ptr<const PotentialSpec> pot_;
    double span_;
    bool one_sided_ = true;
    // Lower branch: xi_minus nodes descending from 1, with G and running min of alpha on [node, 1].
    std::vector<double> lo_nodes_, lo_G_, lo_amin_;
    // Upper branch for the two-sided fallback.
    std::vector<double> hi_nodes_, hi_G_, hi_amin_;
};

double sigma_jump_cost(const WeightSpec& weight, const PotentialSpec& pot, double r,
                       double xi_span = 10.0);

} // namespace kwc
