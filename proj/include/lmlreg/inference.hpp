#pragma once

#include "lmlreg/lattice.hpp"
#include "lmlreg/params.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <set>
#include <vector>

namespace lmlreg {

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

// Observed counts n(y_V, x_U): rows are response patterns, columns are
// covariate cells, both as subset masks.
class CountTable {
public:
    CountTable(SubsetLattice responses, SubsetLattice covariates, CountMatrix counts);

    const SubsetLattice& responses() const noexcept { return responses_; }
    const SubsetLattice& covariates() const noexcept { return covariates_; }
    const CountMatrix& counts() const noexcept { return counts_; }
    std::int64_t operator()(Mask y, Mask x) const { return counts_(y, x); }

    std::vector<std::int64_t> column_totals() const;
    std::int64_t total() const { return counts_.sum(); }
    Eigen::MatrixXd as_real() const { return counts_.cast<double>(); }

    // Counts of Y_D | X_U obtained by summing out the responses outside D.
    // The returned table's response lattice holds the labels of D in order.
    CountTable marginal(Mask responses_kept) const;

    bool operator==(const CountTable& other) const {
        return responses_ == other.responses_ && covariates_ == other.covariates_ && counts_ == other.counts_;
    }

private:
    SubsetLattice responses_;
    SubsetLattice covariates_;
    CountMatrix counts_;
};

// One regression coefficient beta_D(E).
struct Coefficient {
    Mask d = 0;
    Mask e = 0;
    bool operator==(const Coefficient&) const = default;
};

// Scan order used everywhere a deterministic order matters:
// (|D|, D, |E|, E).
struct CoefficientOrder {
    bool operator()(const Coefficient& a, const Coefficient& b) const;
};

using CoefficientSet = std::set<Coefficient, CoefficientOrder>;

class ModelSpec {
public:
    explicit ModelSpec(Link link, CoefficientSet zeros = {});

    static ModelSpec saturated(Link link) { return ModelSpec(link); }

    Link link() const noexcept { return link_; }
    const CoefficientSet& zeros() const noexcept { return zeros_; }
    bool is_zero(Mask d, Mask e) const { return zeros_.count({d, e}) > 0; }
    std::size_t df() const { return zeros_.size(); }

    void add_zero(Coefficient c);
    ModelSpec with_link(Link link) const { return ModelSpec(link, zeros_); }

    // Throws if a constrained pair is outside the lattices.
    void check(const SubsetLattice& responses, const SubsetLattice& covariates) const;

    // Unconstrained coefficients with D nonempty, in scan order.
    std::vector<Coefficient> free_coefficients(const SubsetLattice& responses,
                                               const SubsetLattice& covariates) const;

private:
    Link link_;
    CoefficientSet zeros_;
};

struct FitOptions {
    int max_iterations = 200;
    double gradient_tolerance = 1e-8;
    int max_halvings = 30;
    double hessian_step = 1e-5;
    // Adds this pseudo-count to every cell before fitting.
    std::optional<double> smoothing;
    // Drop covariate cells with no observations from the likelihood.
    bool allow_missing_cells = false;
};

struct FitResult {
    ModelSpec spec;
    ParamMatrix beta_hat;
    ParamMatrix pi_hat;
    std::vector<Coefficient> free;                    // indexes covariance rows
    std::optional<Eigen::MatrixXd> covariance{};      // absent when information is singular
    std::vector<std::optional<double>> std_errors{};
    std::vector<std::optional<double>> wald_p{};
    double loglik = 0.0;
    double deviance = 0.0;
    int df = 0;
    double deviance_p = 1.0;
    bool converged = false;
    int iterations = 0;
    double gradient_norm = 0.0;
    double smoothing = 0.0;
    std::vector<Mask> excluded_cells{};

    // Position of a free coefficient in `free`, if it is free.
    std::optional<std::size_t> index_of(Mask d, Mask e) const;
};

struct WaldTest {
    Coefficient coefficient;
    double estimate = 0.0;
    std::optional<double> se;
    std::optional<double> p;
};

double loglik(const ParamMatrix& pi, const CountTable& data);

FitResult fit(const ModelSpec& spec, const CountTable& data, const FitOptions& options = {});

// G^2 of the fitted probabilities against the (possibly smoothed) counts.
double deviance(const FitResult& fit, const CountTable& data);
double chi_square_upper_tail(double statistic, int df);
double normal_two_sided_p(double z);

std::vector<WaldTest> wald_tests(const FitResult& fit);

// Independent multinomial draws per covariate cell with the given totals.
CountTable simulate(const ParamMatrix& beta, const std::vector<std::int64_t>& column_totals, std::uint64_t seed);

// Fitted coefficients on the LM scale with delta-method standard errors
// (NaN where unavailable). For an LML fit these are the induced values
// beta_mu = Z_V^T beta_gamma.
struct CoefficientSummary {
    ParamMatrix estimates;
    Eigen::MatrixXd se;
};
CoefficientSummary induced_lm_coefficients(const FitResult& fit);

// Score of the log-likelihood with respect to every entry of beta, row {}
// included (it is identically zero). Counts may be non-integer.
Eigen::MatrixXd loglik_gradient(const Eigen::MatrixXd& beta, Link link, const Eigen::MatrixXd& counts);

} // namespace lmlreg
