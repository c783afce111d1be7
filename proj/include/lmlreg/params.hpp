#pragma once

#include "lmlreg/lattice.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>

namespace lmlreg {

enum class Link { LM, LML };

// PI: cell probabilities, MU: mean parameters, LOG_MU: the LM link,
// GAMMA: the LML link, BETA_*: regression coefficients on the matching link,
// REF_B: reference coefficients.
enum class ParamKind { PI, MU, LOG_MU, GAMMA, BETA_MU, BETA_GAMMA, REF_B };

std::string to_string(Link link);
std::string to_string(ParamKind kind);
Link parse_link(const std::string& text);
ParamKind parse_kind(const std::string& text);

ParamKind link_kind(Link link);   // LOG_MU or GAMMA
ParamKind coeff_kind(Link link);  // BETA_MU or BETA_GAMMA
Link link_of(ParamKind kind);     // accepts link and coefficient kinds

// Real matrix with rows indexed by subsets of the responses V and columns by
// subsets of the covariates U. The kind tag decides which validity checks
// apply; the values themselves are never mutated after construction.
class ParamMatrix {
public:
    ParamMatrix(ParamKind kind, SubsetLattice responses, SubsetLattice covariates, Eigen::MatrixXd values);

    ParamKind kind() const noexcept { return kind_; }
    const SubsetLattice& responses() const noexcept { return responses_; }
    const SubsetLattice& covariates() const noexcept { return covariates_; }
    const Eigen::MatrixXd& values() const noexcept { return values_; }
    double operator()(Mask d, Mask e) const { return values_(d, e); }

    // Throws ValidationError naming the first violated invariant of kind().
    void validate() const;

    ParamMatrix with_values(ParamKind kind, Eigen::MatrixXd values) const {
        return ParamMatrix(kind, responses_, covariates_, std::move(values));
    }

private:
    ParamKind kind_;
    SubsetLattice responses_;
    SubsetLattice covariates_;
    Eigen::MatrixXd values_;
};

inline constexpr double kColumnSumTolerance = 1e-12;

ParamMatrix mu_from_pi(const ParamMatrix& pi);
ParamMatrix pi_from_mu(const ParamMatrix& mu);
ParamMatrix gamma_from_mu(const ParamMatrix& mu);
ParamMatrix mu_from_gamma(const ParamMatrix& gamma);
ParamMatrix log_mu_from_mu(const ParamMatrix& mu);

// beta = theta M_U and theta = beta Z_U.
ParamMatrix coeffs_from_link(const ParamMatrix& theta);
ParamMatrix link_from_coeffs(const ParamMatrix& beta);

// beta_gamma = M_V^T beta_mu and its inverse.
ParamMatrix beta_gamma_from_beta_mu(const ParamMatrix& beta_mu);
ParamMatrix beta_mu_from_beta_gamma(const ParamMatrix& beta_gamma);

ParamMatrix pi_from_beta(const ParamMatrix& beta);
ParamMatrix beta_from_pi(const ParamMatrix& pi, Link link);

// Allocation-light kernels on bare matrices, used by the optimizer.
namespace raw {

struct BadCell {
    Mask row;
    Mask col;
    double value;
};

// Fills pi; returns the first non-positive cell instead of throwing.
std::optional<BadCell> pi_from_beta(const Eigen::MatrixXd& beta, Link link, Eigen::MatrixXd& pi,
                                    Eigen::MatrixXd* mu_out = nullptr);
Eigen::MatrixXd beta_from_pi(const Eigen::MatrixXd& pi, Link link);

} // namespace raw

} // namespace lmlreg
