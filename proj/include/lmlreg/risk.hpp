#pragma once

#include "lmlreg/inference.hpp"
#include "lmlreg/params.hpp"

#include <optional>
#include <vector>

namespace lmlreg {

// Reference coefficients: for |D| > 1,
//   B_D(E) = -sum over proper subsets D' of D of (-1)^{|D \ D'|} beta_mu_D'(E).
// Rows with |D| <= 1 are zero.
ParamMatrix reference_coeffs(const ParamMatrix& beta_mu);

// log RR_u(Y^D = 1 | E) for a covariate index u not in E. Zero for D = {}.
double log_relative_risk(const ParamMatrix& beta_mu, Mask d, int u, Mask e);
// Same quantity read directly off the mean parameters.
double log_relative_risk_from_mu(const ParamMatrix& mu, Mask d, int u, Mask e);

// log of the reference relative risk, |D| > 1, summed from the reference
// coefficients.
double log_reference_rr(const ParamMatrix& beta_mu, Mask d, int u, Mask e);
// The same value as the signed product of lower-order relative risks.
double log_reference_rr_product(const ParamMatrix& beta_mu, Mask d, int u, Mask e);

// log(RR / reference RR) as a sum of LML coefficients, |D| > 1.
double log_rr_ratio(const ParamMatrix& beta_gamma, Mask d, int u, Mask e);

struct RiskEntry {
    Mask d = 0;
    int u = 0;
    Mask e = 0;
    double log_rr = 0.0;
    std::optional<double> log_ref_rr;
    std::optional<double> log_ratio;
    bool ratio_constrained = false;
};

// Every (D, u, E) with D nonempty and E a subset of U \ {u}. When a spec is
// given, ratio_constrained marks ratios the model fixes at zero.
std::vector<RiskEntry> risk_report(const ParamMatrix& beta_mu, const ModelSpec* spec = nullptr);

struct ResponseIndependence {
    Mask d = 0;  // A union B
    Mask a = 0;  // holds the lowest element of D
    Mask b = 0;
    bool operator==(const ResponseIndependence&) const = default;
};

struct CovariateIndependence {
    Mask d = 0;        // responses Y_D
    Mask removed = 0;  // covariates X_U' with no effect given the rest
    bool operator==(const CovariateIndependence&) const = default;
};

// Y_A indep Y_B | X_U, read off the structural zeros of an LML spec. An LM
// spec has no zero pattern of this kind and yields an empty list.
std::vector<ResponseIndependence> implied_response_independencies(const ModelSpec& spec,
                                                                  const SubsetLattice& responses,
                                                                  const SubsetLattice& covariates);
// The same scan over fitted LML coefficients, treating |value| <= tol as zero.
std::vector<ResponseIndependence> implied_response_independencies(const ParamMatrix& beta_gamma, double tol = 1e-8);

// Y_D indep X_U' | X_{U \ U'}; zero patterns coincide on both links.
std::vector<CovariateIndependence> implied_covariate_independencies(const ModelSpec& spec,
                                                                    const SubsetLattice& responses,
                                                                    const SubsetLattice& covariates);

} // namespace lmlreg
