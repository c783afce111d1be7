#include "lmlreg/params.hpp"

#include "lmlreg/errors.hpp"

#include <cmath>

namespace lmlreg {

std::string to_string(Link link) { return link == Link::LM ? "lm" : "lml"; }

std::string to_string(ParamKind kind) {
    switch (kind) {
    case ParamKind::PI: return "pi";
    case ParamKind::MU: return "mu";
    case ParamKind::LOG_MU: return "log-mu";
    case ParamKind::GAMMA: return "gamma";
    case ParamKind::BETA_MU: return "beta-mu";
    case ParamKind::BETA_GAMMA: return "beta-gamma";
    case ParamKind::REF_B: return "ref-b";
    }
    return "?";
}

Link parse_link(const std::string& text) {
    if (text == "lm" || text == "LM") return Link::LM;
    if (text == "lml" || text == "LML") return Link::LML;
    throw ArgumentError("unknown link '" + text + "' (expected lm or lml)");
}

ParamKind parse_kind(const std::string& text) {
    for (auto k : {ParamKind::PI, ParamKind::MU, ParamKind::LOG_MU, ParamKind::GAMMA, ParamKind::BETA_MU,
                   ParamKind::BETA_GAMMA, ParamKind::REF_B}) {
        if (to_string(k) == text) return k;
    }
    throw ArgumentError("unknown parameter kind '" + text + "'");
}

ParamKind link_kind(Link link) { return link == Link::LM ? ParamKind::LOG_MU : ParamKind::GAMMA; }
ParamKind coeff_kind(Link link) { return link == Link::LM ? ParamKind::BETA_MU : ParamKind::BETA_GAMMA; }

Link link_of(ParamKind kind) {
    switch (kind) {
    case ParamKind::LOG_MU:
    case ParamKind::BETA_MU: return Link::LM;
    case ParamKind::GAMMA:
    case ParamKind::BETA_GAMMA: return Link::LML;
    default: throw ArgumentError("parameter kind " + to_string(kind) + " has no associated link");
    }
}

ParamMatrix::ParamMatrix(ParamKind kind, SubsetLattice responses, SubsetLattice covariates, Eigen::MatrixXd values)
    : kind_(kind), responses_(std::move(responses)), covariates_(std::move(covariates)), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.rows()) != responses_.size() ||
        static_cast<std::size_t>(values_.cols()) != covariates_.size()) {
        throw ShapeError("parameter matrix is " + std::to_string(values_.rows()) + "x" +
                         std::to_string(values_.cols()) + ", expected " + std::to_string(responses_.size()) + "x" +
                         std::to_string(covariates_.size()));
    }
}

namespace {

void require(const ParamMatrix& m, ParamKind kind, const char* op) {
    if (m.kind() != kind) {
        throw ArgumentError(std::string(op) + " expects a " + to_string(kind) + " matrix, got " + to_string(m.kind()));
    }
}

std::string cell_name(const ParamMatrix& m, Mask d, Mask e) {
    return "(" + m.responses().format(d) + ", " + m.covariates().format(e) + ")";
}

void require_zero_empty_row(const ParamMatrix& m) {
    for (Eigen::Index e = 0; e < m.values().cols(); ++e) {
        if (std::abs(m.values()(0, e)) > kColumnSumTolerance) {
            throw ValidationError(to_string(m.kind()) + ": row {} must be zero, found " +
                                  std::to_string(m.values()(0, e)) + " at " + cell_name(m, 0, e));
        }
    }
}

void require_unit_empty_row(const ParamMatrix& m) {
    for (Eigen::Index e = 0; e < m.values().cols(); ++e) {
        if (std::abs(m.values()(0, e) - 1.0) > kColumnSumTolerance) {
            throw ValidationError(to_string(m.kind()) + ": row {} must be one, found " +
                                  std::to_string(m.values()(0, e)) + " at " + cell_name(m, 0, e));
        }
    }
}

BoundaryError boundary(const ParamMatrix& shape, const raw::BadCell& bad) {
    return BoundaryError("implied probability " + std::to_string(bad.value) + " at cell " +
                             cell_name(shape, bad.row, bad.col) + " is not positive",
                         bad.row, bad.col, bad.value);
}

std::optional<raw::BadCell> first_nonpositive(const Eigen::MatrixXd& pi) {
    for (Eigen::Index e = 0; e < pi.cols(); ++e)
        for (Eigen::Index d = 0; d < pi.rows(); ++d)
            if (!(pi(d, e) > 0.0)) return raw::BadCell{static_cast<Mask>(d), static_cast<Mask>(e), pi(d, e)};
    return std::nullopt;
}

} // namespace

void ParamMatrix::validate() const {
    const auto& v = values_;
    switch (kind_) {
    case ParamKind::PI:
        for (Eigen::Index e = 0; e < v.cols(); ++e) {
            for (Eigen::Index d = 0; d < v.rows(); ++d) {
                if (!(v(d, e) > 0.0)) {
                    throw ValidationError("pi: entries must be strictly positive, found " + std::to_string(v(d, e)) +
                                          " at " + cell_name(*this, d, e));
                }
            }
            const double s = v.col(e).sum();
            if (std::abs(s - 1.0) > kColumnSumTolerance) {
                throw ValidationError("pi: column " + covariates_.format(e) + " sums to " + std::to_string(s) +
                                      ", not 1");
            }
        }
        break;
    case ParamKind::MU:
        require_unit_empty_row(*this);
        for (Eigen::Index e = 0; e < v.cols(); ++e) {
            for (Eigen::Index d = 0; d < v.rows(); ++d) {
                if (!(v(d, e) > 0.0) || v(d, e) > 1.0 + kColumnSumTolerance) {
                    throw ValidationError("mu: entries must lie in (0,1], found " + std::to_string(v(d, e)) + " at " +
                                          cell_name(*this, d, e));
                }
                // Monotone: dropping one element never lowers the mean parameter.
                for (int i = 0; i < responses_.ground_size(); ++i) {
                    const Mask bit = Mask{1} << i;
                    if ((d & bit) && v(d, e) > v(d ^ bit, e) + kColumnSumTolerance) {
                        throw ValidationError("mu: not monotone at " + cell_name(*this, d, e));
                    }
                }
            }
        }
        break;
    case ParamKind::GAMMA:
    case ParamKind::LOG_MU:
    case ParamKind::BETA_MU:
    case ParamKind::BETA_GAMMA:
        require_zero_empty_row(*this);
        break;
    case ParamKind::REF_B:
        break;
    }
}

ParamMatrix mu_from_pi(const ParamMatrix& pi) {
    require(pi, ParamKind::PI, "mu_from_pi");
    pi.validate();
    Eigen::MatrixXd mu = pi.values();
    left_zeta(mu);
    mu.row(0).setOnes(); // exact, the column sums are 1 within tolerance
    return pi.with_values(ParamKind::MU, std::move(mu));
}

ParamMatrix pi_from_mu(const ParamMatrix& mu) {
    require(mu, ParamKind::MU, "pi_from_mu");
    require_unit_empty_row(mu);
    Eigen::MatrixXd pi = mu.values();
    left_mobius(pi);
    if (auto bad = first_nonpositive(pi)) throw boundary(mu, *bad);
    return mu.with_values(ParamKind::PI, std::move(pi));
}

ParamMatrix log_mu_from_mu(const ParamMatrix& mu) {
    require(mu, ParamKind::MU, "log_mu_from_mu");
    const auto& v = mu.values();
    for (Eigen::Index e = 0; e < v.cols(); ++e)
        for (Eigen::Index d = 0; d < v.rows(); ++d)
            if (!(v(d, e) > 0.0))
                throw DomainError("mu entry " + std::to_string(v(d, e)) + " at " + cell_name(mu, d, e) +
                                  " has no logarithm");
    return mu.with_values(ParamKind::LOG_MU, v.array().log().matrix());
}

ParamMatrix gamma_from_mu(const ParamMatrix& mu) {
    ParamMatrix log_mu = log_mu_from_mu(mu);
    Eigen::MatrixXd g = log_mu.values();
    left_mobius_t(g);
    g.row(0).setZero();
    return mu.with_values(ParamKind::GAMMA, std::move(g));
}

ParamMatrix mu_from_gamma(const ParamMatrix& gamma) {
    require(gamma, ParamKind::GAMMA, "mu_from_gamma");
    require_zero_empty_row(gamma);
    Eigen::MatrixXd m = gamma.values();
    m.row(0).setZero();
    left_zeta_t(m);
    return gamma.with_values(ParamKind::MU, m.array().exp().matrix());
}

ParamMatrix coeffs_from_link(const ParamMatrix& theta) {
    const Link link = link_of(theta.kind());
    if (theta.kind() != link_kind(link)) {
        throw ArgumentError("coeffs_from_link expects log-mu or gamma, got " + to_string(theta.kind()));
    }
    Eigen::MatrixXd b = theta.values();
    right_mobius(b);
    return theta.with_values(coeff_kind(link), std::move(b));
}

ParamMatrix link_from_coeffs(const ParamMatrix& beta) {
    const Link link = link_of(beta.kind());
    if (beta.kind() != coeff_kind(link)) {
        throw ArgumentError("link_from_coeffs expects beta-mu or beta-gamma, got " + to_string(beta.kind()));
    }
    Eigen::MatrixXd t = beta.values();
    right_zeta(t);
    return beta.with_values(link_kind(link), std::move(t));
}

ParamMatrix beta_gamma_from_beta_mu(const ParamMatrix& beta_mu) {
    require(beta_mu, ParamKind::BETA_MU, "beta_gamma_from_beta_mu");
    Eigen::MatrixXd b = beta_mu.values();
    left_mobius_t(b);
    return beta_mu.with_values(ParamKind::BETA_GAMMA, std::move(b));
}

ParamMatrix beta_mu_from_beta_gamma(const ParamMatrix& beta_gamma) {
    require(beta_gamma, ParamKind::BETA_GAMMA, "beta_mu_from_beta_gamma");
    Eigen::MatrixXd b = beta_gamma.values();
    left_zeta_t(b);
    return beta_gamma.with_values(ParamKind::BETA_MU, std::move(b));
}

ParamMatrix pi_from_beta(const ParamMatrix& beta) {
    const Link link = link_of(beta.kind());
    if (beta.kind() != coeff_kind(link)) {
        throw ArgumentError("pi_from_beta expects beta-mu or beta-gamma, got " + to_string(beta.kind()));
    }
    require_zero_empty_row(beta);
    Eigen::MatrixXd pi;
    if (auto bad = raw::pi_from_beta(beta.values(), link, pi)) throw boundary(beta, *bad);
    return beta.with_values(ParamKind::PI, std::move(pi));
}

ParamMatrix beta_from_pi(const ParamMatrix& pi, Link link) {
    require(pi, ParamKind::PI, "beta_from_pi");
    pi.validate();
    return pi.with_values(coeff_kind(link), raw::beta_from_pi(pi.values(), link));
}

namespace raw {

std::optional<BadCell> pi_from_beta(const Eigen::MatrixXd& beta, Link link, Eigen::MatrixXd& pi,
                                    Eigen::MatrixXd* mu_out) {
    pi = beta;
    pi.row(0).setZero();
    right_zeta(pi); // link scale
    if (link == Link::LML) left_zeta_t(pi);
    pi = pi.array().exp().matrix();
    if (mu_out) *mu_out = pi;
    left_mobius(pi);
    return first_nonpositive(pi);
}

Eigen::MatrixXd beta_from_pi(const Eigen::MatrixXd& pi, Link link) {
    Eigen::MatrixXd t = pi;
    left_zeta(t);
    t.row(0).setOnes();
    t = t.array().log().matrix();
    if (link == Link::LML) left_mobius_t(t);
    right_mobius(t);
    t.row(0).setZero();
    return t;
}

} // namespace raw

} // namespace lmlreg
