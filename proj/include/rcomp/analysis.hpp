#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "rcomp/calculus.hpp"

namespace rcomp {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct GraphSample {
    std::vector<Vector> x, xstar, y;
    double gamma = 1.0;
    double radius = 1.0;
    std::uint64_t seed = 0;
    std::size_t size() const { return x.size(); }
};

// y uniform in B(0; radius), pairs (J y, (y - J y)/gamma)
GraphSample minty_sample(const Expr& a, double gamma, double radius, std::size_t n, std::uint64_t seed,
                         int threads = 1);

struct ModulusReport {
    double beta_hat = 0.0;
    std::size_t pair_count = 0;
    std::size_t skipped = 0;
    InnerProduct inner_product;
};

// min over pairs of <dx, dx*> / <dx, dx>, pairs with ||dx|| <= eps_pair dropped
ModulusReport modulus_estimate(const GraphSample& s, const InnerProduct& ip, double eps_pair);
ModulusReport modulus_estimate(const GraphSample& s, const InnerProduct& ip);

// min over pairs of <Tx - Ty, x - y> - ||Tx - Ty||^2 for T = J_{gamma A}
double firm_nonexpansive_margin(const Expr& a, double gamma, double radius, std::size_t n, std::uint64_t seed);

struct GapSample {
    std::vector<Vector> points;
    std::vector<double> gaps;
    double max_gap() const;
};

// per-point resolvent gaps ||J_{gamma A1} x - J_{gamma A2} x|| over x uniform in B(0; delta)
GapSample gap_sample(const Expr& a1, const Expr& a2, double gamma, double delta, std::size_t n, std::uint64_t seed,
                     int threads = 1);

// sampled lower estimate of d_{gamma,delta}
double d_gamma_delta(const Expr& a1, const Expr& a2, double gamma, double delta, std::size_t n, std::uint64_t seed,
                     int threads = 1);

struct MetricRecord {
    double gamma = kNaN;
    double delta = kNaN;
    double rho = kNaN;
    double d = kNaN;
    double haus_lower = kNaN;
    double haus_upper = kNaN;
    double beta_hat = kNaN;
};

// Graph distances use the product norm sqrt(|dx|^2 + |dx*|^2); truncation is the product-space ball.
MetricRecord hausdorff_estimate(const Expr& a1, const Expr& a2, double rho, double gamma_probe, std::size_t n,
                                std::uint64_t seed, int threads = 1);

// rho for which d_{gamma,delta} <= (2 + gamma) haus_rho; read as max{t, t/gamma}, t = delta + |J_{gamma A1} 0|
double hausdorff_rho_for_delta(const Expr& a1, double gamma, double delta);

enum class FitzMode { Compose, Cocompose };

struct FitzpatrickReport {
    double min_slack = 0.0;   // min over samples of bound - inner value
    double max_inner = 0.0;   // sampled lower estimate of the left Fitzpatrick value
    double bound = kNaN;      // closed-form right side when available
    bool bound_exact = false;
    std::size_t samples = 0;
};

// Fitzpatrick value of c Id at (u, u*): |u* + c u|^2 / (4c); c = 0 gives 0 or +inf
double fitzpatrick_scaled_identity(double c, const Vector& u, const Vector& ustar);

// Inner objective of the Minty form of F_T at (x, x*) for T with resolvent J evaluated at y.
double fitzpatrick_inner(const Vector& x, const Vector& xstar, const Vector& y, const Vector& jy);

FitzpatrickReport fitzpatrick_check(const LinearMap& l, const Expr& b, double gamma, const Vector& x,
                                    const Vector& xstar, std::size_t n, std::uint64_t seed, double radius = 5.0,
                                    FitzMode mode = FitzMode::Compose);

// average of ScaledIdentity leaves: sampled F of gamma*average against sum alpha_k F_{gamma B_k}
FitzpatrickReport fitzpatrick_average_check(const Expr& average, const Vector& x, const Vector& xstar,
                                            std::size_t n, std::uint64_t seed, double radius = 5.0);

enum class SweepKind { CocomposeLimit, VanishingScale, ExplodingScale, YosidaLimit, Perturbation };
std::string sweep_kind_name(SweepKind k);
SweepKind parse_sweep_kind(const std::string& s);

struct SweepSpec {
    SweepKind kind = SweepKind::YosidaLimit;
    std::vector<double> gammas;
    double gamma_fixed = 1.0;   // parameter at which resolvent gaps are measured
    double delta = 1.0;
    double rho = 1.0;
    std::size_t samples = 500;
    std::uint64_t seed = 0;
    LinearMap l;
    Expr b;
    Expr limit;                 // declared limit (N_{cdom B}, N_{zer B}) or empty
    bool cocompose = false;
    bool constant = false;      // perturbation: constant sequence
    double base_gamma = 1.0;    // perturbation: limit parameter
    bool hausdorff = false;     // add haus columns
    int threads = 1;
};

struct SweepRow {
    MetricRecord m;
    double bound = kNaN;    // cocompose-limit: closed-form bound
    double y_bound = kNaN;  // bound on |y| entering it
};

struct SweepReport {
    std::string experiment;
    std::uint64_t config_hash = 0;
    std::vector<SweepRow> rows;
};

SweepReport gamma_sweep(const SweepSpec& spec);

// bound on |J_{L cocomp_gamma B} x - J_{L^* B L} x| over |x| <= 2 rho, for gamma < 1 and |y| <= eta
double cocompose_limit_bound(double gamma, double rho, double delta, double eta);

// Writes gamma, delta, rho, d, haus_lower, haus_upper, beta_hat with 17 significant digits; NaN is empty.
void write_csv(std::ostream& os, const std::vector<MetricRecord>& rows);
void write_csv(std::ostream& os, const SweepReport& r);
std::string format_double(double v);

}  // namespace rcomp
