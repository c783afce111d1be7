#include "lmlreg/risk.hpp"

#include "lmlreg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace lmlreg {

namespace {

void require_kind(const ParamMatrix& m, ParamKind kind, const char* op) {
    if (m.kind() != kind) {
        throw ArgumentError(std::string(op) + " expects " + to_string(kind) + ", got " + to_string(m.kind()));
    }
}

Mask covariate_bit(const ParamMatrix& m, int u, Mask e) {
    if (u < 0 || u >= m.covariates().ground_size()) throw ArgumentError("covariate index out of range");
    if (e > m.covariates().full()) throw RangeError("covariate subset out of range");
    const Mask bit = Mask{1} << u;
    if (e & bit) throw ArgumentError("conditioning set must not contain the covariate " + m.covariates().labels()[u]);
    return bit;
}

void check_pattern(const ParamMatrix& m, Mask d, bool need_joint) {
    if (d > m.responses().full()) throw RangeError("response subset out of range");
    if (need_joint && popcount(d) < 2) throw ArgumentError("reference relative risks need |D| > 1");
}

// sum over E' subset of E of m(D, E' u {u})
double sum_over_conditioning(const Eigen::MatrixXd& m, Mask d, Mask bit, Mask e) {
    double s = 0.0;
    Mask sub = e;
    while (true) {
        s += m(d, sub | bit);
        if (sub == 0) break;
        sub = (sub - 1) & e;
    }
    return s;
}

// True when every D' subset of `d` meeting both a and b has a zero row.
bool straddlers_zero(Mask d, Mask a, Mask b, const std::function<bool(Mask)>& row_zero) {
    Mask sub = d;
    while (sub != 0) {
        if ((sub & a) && (sub & b) && !row_zero(sub)) return false;
        sub = (sub - 1) & d;
    }
    return true;
}

std::vector<ResponseIndependence> scan_bipartitions(Mask full, const std::function<bool(Mask)>& row_zero) {
    std::vector<ResponseIndependence> out;
    std::vector<Mask> order;
    for (Mask d = 1; d <= full; ++d) order.push_back(d);
    std::stable_sort(order.begin(), order.end(), [](Mask x, Mask y) { return popcount(x) < popcount(y); });
    for (Mask d : order) {
        if (popcount(d) < 2) continue;
        const Mask low = d & (~d + 1);
        const Mask rest = d ^ low;
        // A always holds the lowest element; B = D \ A must be nonempty.
        Mask extra = 0;
        while (true) {
            const Mask a = low | extra;
            const Mask b = d ^ a;
            if (b != 0 && straddlers_zero(d, a, b, row_zero)) out.push_back({d, a, b});
            if (extra == rest) break;
            extra = ((extra | ~rest) + 1) & rest;
        }
    }
    return out;
}

} // namespace

ParamMatrix reference_coeffs(const ParamMatrix& beta_mu) {
    require_kind(beta_mu, ParamKind::BETA_MU, "reference_coeffs");
    const auto& b = beta_mu.values();
    Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(b.rows(), b.cols());
    for (Mask d = 0; d < static_cast<Mask>(b.rows()); ++d) {
        if (popcount(d) < 2) continue;
        Mask sub = (d - 1) & d;
        while (true) {
            const double sign = (popcount(d & ~sub) % 2 == 0) ? 1.0 : -1.0;
            ref.row(d) -= sign * b.row(sub);
            if (sub == 0) break;
            sub = (sub - 1) & d;
        }
    }
    return beta_mu.with_values(ParamKind::REF_B, std::move(ref));
}

double log_relative_risk(const ParamMatrix& beta_mu, Mask d, int u, Mask e) {
    require_kind(beta_mu, ParamKind::BETA_MU, "log_relative_risk");
    const Mask bit = covariate_bit(beta_mu, u, e);
    check_pattern(beta_mu, d, false);
    if (d == 0) return 0.0;
    return sum_over_conditioning(beta_mu.values(), d, bit, e);
}

double log_relative_risk_from_mu(const ParamMatrix& mu, Mask d, int u, Mask e) {
    require_kind(mu, ParamKind::MU, "log_relative_risk_from_mu");
    const Mask bit = covariate_bit(mu, u, e);
    check_pattern(mu, d, false);
    return std::log(mu(d, e | bit)) - std::log(mu(d, e));
}

double log_reference_rr(const ParamMatrix& beta_mu, Mask d, int u, Mask e) {
    require_kind(beta_mu, ParamKind::BETA_MU, "log_reference_rr");
    const Mask bit = covariate_bit(beta_mu, u, e);
    check_pattern(beta_mu, d, true);
    return sum_over_conditioning(reference_coeffs(beta_mu).values(), d, bit, e);
}

double log_reference_rr_product(const ParamMatrix& beta_mu, Mask d, int u, Mask e) {
    require_kind(beta_mu, ParamKind::BETA_MU, "log_reference_rr_product");
    covariate_bit(beta_mu, u, e);
    check_pattern(beta_mu, d, true);
    double s = 0.0;
    Mask sub = (d - 1) & d;
    while (sub != 0) {
        // exponent (-1)^{|D \ D'| + 1}
        const double sign = (popcount(d & ~sub) % 2 == 0) ? -1.0 : 1.0;
        s += sign * log_relative_risk(beta_mu, sub, u, e);
        sub = (sub - 1) & d;
    }
    return s;
}

double log_rr_ratio(const ParamMatrix& beta_gamma, Mask d, int u, Mask e) {
    require_kind(beta_gamma, ParamKind::BETA_GAMMA, "log_rr_ratio");
    const Mask bit = covariate_bit(beta_gamma, u, e);
    check_pattern(beta_gamma, d, true);
    return sum_over_conditioning(beta_gamma.values(), d, bit, e);
}

std::vector<RiskEntry> risk_report(const ParamMatrix& beta_mu, const ModelSpec* spec) {
    require_kind(beta_mu, ParamKind::BETA_MU, "risk_report");
    const ParamMatrix ref = reference_coeffs(beta_mu);
    const ParamMatrix beta_gamma = beta_gamma_from_beta_mu(beta_mu);
    const auto& V = beta_mu.responses();
    const auto& U = beta_mu.covariates();
    std::vector<RiskEntry> out;
    for (Mask d : V.graded_order()) {
        if (d == 0) continue;
        for (int u = 0; u < U.ground_size(); ++u) {
            const Mask bit = Mask{1} << u;
            for (Mask e : U.graded_order()) {
                if (e & bit) continue;
                RiskEntry r{d, u, e, sum_over_conditioning(beta_mu.values(), d, bit, e), {}, {}, false};
                if (popcount(d) > 1) {
                    r.log_ref_rr = sum_over_conditioning(ref.values(), d, bit, e);
                    r.log_ratio = sum_over_conditioning(beta_gamma.values(), d, bit, e);
                    if (spec && spec->link() == Link::LML) {
                        bool fixed = true;
                        Mask sub = e;
                        while (true) {
                            fixed = fixed && spec->is_zero(d, sub | bit);
                            if (sub == 0) break;
                            sub = (sub - 1) & e;
                        }
                        r.ratio_constrained = fixed;
                    }
                }
                out.push_back(r);
            }
        }
    }
    return out;
}

std::vector<ResponseIndependence> implied_response_independencies(const ModelSpec& spec,
                                                                  const SubsetLattice& responses,
                                                                  const SubsetLattice& covariates) {
    spec.check(responses, covariates);
    if (spec.link() != Link::LML) return {};
    auto row_zero = [&](Mask d) {
        for (Mask e = 0; e < covariates.size(); ++e)
            if (!spec.is_zero(d, e)) return false;
        return true;
    };
    return scan_bipartitions(responses.full(), row_zero);
}

std::vector<ResponseIndependence> implied_response_independencies(const ParamMatrix& beta_gamma, double tol) {
    require_kind(beta_gamma, ParamKind::BETA_GAMMA, "implied_response_independencies");
    const auto& b = beta_gamma.values();
    auto row_zero = [&](Mask d) { return b.row(d).cwiseAbs().maxCoeff() <= tol; };
    return scan_bipartitions(beta_gamma.responses().full(), row_zero);
}

std::vector<CovariateIndependence> implied_covariate_independencies(const ModelSpec& spec,
                                                                    const SubsetLattice& responses,
                                                                    const SubsetLattice& covariates) {
    spec.check(responses, covariates);
    std::vector<CovariateIndependence> out;
    for (Mask d : responses.graded_order()) {
        if (d == 0) continue;
        for (Mask removed : covariates.graded_order()) {
            if (removed == 0) continue;
            bool holds = true;
            Mask sub = d;
            while (holds && sub != 0) {
                for (Mask e = 0; e < covariates.size() && holds; ++e)
                    if ((e & removed) && !spec.is_zero(sub, e)) holds = false;
                sub = (sub - 1) & d;
            }
            if (holds) out.push_back({d, removed});
        }
    }
    return out;
}

} // namespace lmlreg
