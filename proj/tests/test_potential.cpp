#include "doctest.h"

#include "kwc/errors.hpp"
#include "kwc/potential.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace kwc;

namespace {

std::vector<double> grid(double lo, double hi, double step)
{
    std::vector<double> g;
    for (int i = 0; lo + i * step <= hi + 1e-12; ++i)
        g.push_back(std::round((lo + i * step) * 1e9) / 1e9);
    return g;
}

// Independent trapezoid rule for integral_1^s sqrt(F).
double trapezoid_sqrt(const PotentialSpec& p, double s, int n)
{
    const double h = (s - 1.0) / n;
    double acc = 0.5 * (std::sqrt(p(1.0)) + std::sqrt(p(s)));
    for (int i = 1; i < n; ++i)
        acc += std::sqrt(p(1.0 + i * h));
    return std::abs(acc * h);
}

// Brute force over a dense xi grid: r * min_[xi,1] v^2 + (1 - xi)^2.
double sigma_brute(double r, int n)
{
    double best = r;
    for (int i = 0; i <= n; ++i) {
        const double xi = -1.0 + 2.0 * i / n;
        const double amin = xi >= 0.0 ? xi * xi : 0.0;
        best = std::min(best, r * amin + (1.0 - xi) * (1.0 - xi));
    }
    return best;
}

} // namespace

TEST_CASE("assumption checks on the shipped and custom potentials")
{
    const auto g = grid(-2.0, 3.0, 0.01);
    const auto q = check_assumptions(PotentialSpec::quadratic(), g);
    CHECK(q.f1_ok);
    CHECK(q.f2_ok);
    CHECK(q.f2prime_ok);

    const auto two_wells = PotentialSpec::custom(
        "two", [](double v) { return (v - 1) * (v - 1) * (v - 2) * (v - 2); }, {});
    CHECK_FALSE(check_assumptions(two_wells, g).f1_ok);
    CHECK_FALSE(two_wells.satisfies_f1());

    const auto negative = PotentialSpec::custom("neg", [](double) { return -1.0; }, [](double) { return 0.0; });
    const auto rep = check_assumptions(negative, g);
    CHECK_FALSE(rep.f1_ok);
    CHECK(rep.worst_violation == doctest::Approx(1.0));

    CHECK_THROWS_AS(check_assumptions(PotentialSpec::quadratic(), std::vector<double>{}), InvalidArgument);
    CHECK_THROWS_AS(check_assumptions(PotentialSpec::quadratic(), std::vector<double>{0.0, 2.0}), InvalidArgument);

    const auto quartic = PotentialSpec::quartic();
    CHECK(quartic.satisfies_f1());
    CHECK(quartic.satisfies_f2());
    CHECK(quartic.satisfies_f2prime());
}

TEST_CASE("tabulated potential keeps its flags computed, not trusted")
{
    std::vector<double> v, f;
    for (int i = -40; i <= 40; ++i) {
        v.push_back(1.0 + 0.1 * i);
        f.push_back((v.back() - 1.0) * (v.back() - 1.0));
    }
    const auto t = PotentialSpec::tabulated(v, f);
    CHECK(t.satisfies_f1());
    CHECK(t.satisfies_f2prime());
    CHECK(t(1.25) == doctest::Approx(0.0625).epsilon(1e-2));
    CHECK(t(1.0) == 0.0);
}

TEST_CASE("G against closed form and an independent trapezoid rule")
{
    const auto q = PotentialSpec::quadratic();
    CHECK(G(q, 1.0) == 0.0);
    CHECK(G(q, 0.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(G(q, 1.2) == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(std::abs(G(q, 1.2) - trapezoid_sqrt(q, 1.2, 1000000)) < 1e-10);
    for (int i = 0; i <= 600; ++i) {
        const double s = -3.0 + 0.01 * i;
        CHECK(std::abs(G(q, s) - 0.5 * (s - 1) * (s - 1)) <= 1e-8);
    }
    const auto quart = PotentialSpec::quartic();
    for (double s : {-1.0, 0.3, 1.7, 2.5})
        CHECK(std::abs(G(quart, s) - trapezoid_sqrt(quart, s, 200000)) < 1e-8);
    // Monotone in |sigma - 1| for an F2' potential.
    double prev = 0.0;
    for (int i = 1; i <= 50; ++i) {
        const double g = G(quart, 1.0 + 0.05 * i);
        CHECK(g >= prev);
        prev = g;
    }
}

TEST_CASE("alpha_min examples and argmin property")
{
    const auto w = WeightSpec::quadratic();
    auto m = alpha_min(w, 0.3, 1.2);
    CHECK(m.eta == doctest::Approx(0.3));
    CHECK(m.value == doctest::Approx(0.09));
    m = alpha_min(w, -0.5, 1.0);
    CHECK(std::abs(m.eta) < 1e-8);
    CHECK(std::abs(m.value) < 1e-15);
    m = alpha_min(WeightSpec::shifted(0.1), 1.0, 1.0);
    CHECK(m.eta == 1.0);
    CHECK(m.value == doctest::Approx(1.1));
    CHECK_THROWS_AS(alpha_min(w, 1.0, 0.5), InvalidArgument);

    const auto wiggly = WeightSpec::custom("wiggly", [](double v) { return 1.5 + std::sin(5 * v) + 0.1 * v * v; });
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> pick(-2.0, 3.0);
    const auto wm = alpha_min(wiggly, -2.0, 3.0);
    for (int i = 0; i < 1000; ++i)
        CHECK(wm.value <= wiggly(pick(rng)) + 1e-14);
}

TEST_CASE("sigma closed form, brute force and structural properties")
{
    const auto w = WeightSpec::quadratic();
    const auto p = PotentialSpec::quadratic();
    CHECK(sigma_jump_cost(w, p, 0.0) == 0.0);
    CHECK(std::abs(sigma_jump_cost(w, p, 1.0) - 0.5) < 1e-9);
    CHECK(std::abs(sigma_jump_cost(w, p, 2.0) - sigma_brute(2.0, 1000000)) < 1e-7);
    CHECK(std::abs(sigma_jump_cost(w, p, 2.0) - 2.0 / 3.0) < 1e-9);
    CHECK_THROWS_AS(sigma_jump_cost(w, p, -1.0), InvalidArgument);

    const JumpCostTable table(w, p);
    std::vector<double> rs;
    for (int i = 0; i <= 40; ++i)
        rs.push_back(0.25 * i);
    std::vector<double> s;
    for (double r : rs) {
        const auto jc = table.evaluate(r);
        s.push_back(jc.value);
        CHECK(jc.value <= r * w(1.0) + 1e-12);
        CHECK(std::abs(jc.eta - 1.0 / (1.0 + r)) <= 1e-4);
    }
    for (std::size_t i = 0; i < rs.size(); ++i)
        for (std::size_t j = i + 1; j < rs.size(); ++j)
            for (double th : {0.25, 0.5, 0.75}) {
                const double mid = table.evaluate(th * rs[i] + (1 - th) * rs[j]).value;
                CHECK(mid >= th * s[i] + (1 - th) * s[j] - 1e-6);
            }
}

TEST_CASE("sigma two-sided fallback when alpha dips above the well")
{
    // alpha smaller above 1: the relaxed jump may use xi_plus > 1.
    const auto w = WeightSpec::custom("dip", [](double v) { return 1.0 + 0.5 * std::sin(3.0 * (v - 1.0)) * (v > 1.0); });
    const auto p = PotentialSpec::quadratic();
    const JumpCostTable table(w, p);
    CHECK_FALSE(table.one_sided());
    // Brute force over (xi-, xi+) pairs.
    const double r = 1.5;
    double best = r * w(1.0);
    for (int i = 0; i <= 400; ++i)
        for (int j = 0; j <= 400; ++j) {
            const double lo = 1.0 - 3.0 * i / 400.0, hi = 1.0 + 3.0 * j / 400.0;
            double amin = 1e300;
            for (int k = 0; k <= 200; ++k)
                amin = std::min(amin, w(lo + (hi - lo) * k / 200.0));
            best = std::min(best, r * amin + (1 - lo) * (1 - lo) + (hi - 1) * (hi - 1));
        }
    const auto jc = table.evaluate(r);
    CHECK(jc.value <= best + 1e-6);
    CHECK(jc.value >= best - 2e-3);
}
