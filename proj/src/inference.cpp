#include "lmlreg/inference.hpp"

#include "lmlreg/errors.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace lmlreg {

CountTable::CountTable(SubsetLattice responses, SubsetLattice covariates, CountMatrix counts)
    : responses_(std::move(responses)), covariates_(std::move(covariates)), counts_(std::move(counts)) {
    if (static_cast<std::size_t>(counts_.rows()) != responses_.size() ||
        static_cast<std::size_t>(counts_.cols()) != covariates_.size()) {
        throw ShapeError("count table is " + std::to_string(counts_.rows()) + "x" + std::to_string(counts_.cols()) +
                         ", expected " + std::to_string(responses_.size()) + "x" + std::to_string(covariates_.size()));
    }
    if ((counts_.array() < 0).any()) throw DataError("count table has negative entries");
}

std::vector<std::int64_t> CountTable::column_totals() const {
    std::vector<std::int64_t> out(counts_.cols());
    for (Eigen::Index e = 0; e < counts_.cols(); ++e) out[e] = counts_.col(e).sum();
    return out;
}

CountTable CountTable::marginal(Mask kept) const {
    if (kept == 0 || kept > responses_.full()) throw RangeError("marginal needs a nonempty subset of the responses");
    std::vector<int> positions;
    std::vector<std::string> labels;
    for (int i = 0; i < responses_.ground_size(); ++i) {
        if ((kept >> i) & 1u) {
            positions.push_back(i);
            labels.push_back(responses_.labels()[i]);
        }
    }
    SubsetLattice sub(labels);
    CountMatrix out = CountMatrix::Zero(static_cast<Eigen::Index>(sub.size()), counts_.cols());
    for (Mask y = 0; y < responses_.size(); ++y) {
        Mask my = 0;
        for (std::size_t j = 0; j < positions.size(); ++j)
            if ((y >> positions[j]) & 1u) my |= Mask{1} << j;
        out.row(my) += counts_.row(y);
    }
    return CountTable(std::move(sub), covariates_, std::move(out));
}

bool CoefficientOrder::operator()(const Coefficient& a, const Coefficient& b) const {
    const int ad = popcount(a.d), bd = popcount(b.d);
    if (ad != bd) return ad < bd;
    if (a.d != b.d) return a.d < b.d;
    const int ae = popcount(a.e), be = popcount(b.e);
    if (ae != be) return ae < be;
    return a.e < b.e;
}

ModelSpec::ModelSpec(Link link, CoefficientSet zeros) : link_(link) {
    for (const auto& c : zeros) add_zero(c);
}

void ModelSpec::add_zero(Coefficient c) {
    if (c.d == 0) throw ArgumentError("coefficients of the empty response set are structurally zero");
    zeros_.insert(c);
}

void ModelSpec::check(const SubsetLattice& responses, const SubsetLattice& covariates) const {
    for (const auto& c : zeros_) {
        if (c.d > responses.full() || c.e > covariates.full()) {
            throw ArgumentError("constrained coefficient (" + std::to_string(c.d) + ", " + std::to_string(c.e) +
                                ") is outside the model lattices");
        }
    }
}

std::vector<Coefficient> ModelSpec::free_coefficients(const SubsetLattice& responses,
                                                      const SubsetLattice& covariates) const {
    CoefficientSet all;
    for (Mask d = 1; d < responses.size(); ++d)
        for (Mask e = 0; e < covariates.size(); ++e)
            if (!is_zero(d, e)) all.insert({d, e});
    return {all.begin(), all.end()};
}

std::optional<std::size_t> FitResult::index_of(Mask d, Mask e) const {
    for (std::size_t k = 0; k < free.size(); ++k)
        if (free[k].d == d && free[k].e == e) return k;
    return std::nullopt;
}

double loglik(const ParamMatrix& pi, const CountTable& data) {
    if (pi.kind() != ParamKind::PI) throw ArgumentError("loglik expects a pi matrix");
    if (pi.values().rows() != data.counts().rows() || pi.values().cols() != data.counts().cols()) {
        throw ShapeError("probability table and count table shapes differ");
    }
    double ll = 0.0;
    for (Eigen::Index e = 0; e < pi.values().cols(); ++e)
        for (Eigen::Index d = 0; d < pi.values().rows(); ++d)
            if (data(d, e) > 0) ll += static_cast<double>(data(d, e)) * std::log(pi(d, e));
    return ll;
}

Eigen::MatrixXd loglik_gradient(const Eigen::MatrixXd& beta, Link link, const Eigen::MatrixXd& counts) {
    Eigen::MatrixXd pi, mu;
    if (auto bad = raw::pi_from_beta(beta, link, pi, &mu)) {
        throw BoundaryError("gradient requested outside the valid region", bad->row, bad->col, bad->value);
    }
    // dl/dpi = n / pi, then back through pi = M_V mu, mu = exp(theta)
    // (LM) or log mu = Z_V^T gamma (LML), and theta = beta Z_U.
    Eigen::MatrixXd g = (counts.array() / pi.array()).matrix();
    left_mobius_t(g);
    g = (g.array() * mu.array()).matrix();
    if (link == Link::LML) left_zeta(g);
    right_zeta_t(g);
    g.row(0).setZero();
    return g;
}

namespace {

// Log-likelihood restricted to the free coefficients of a model.
class Objective {
public:
    Objective(Link link, std::vector<Coefficient> free, Eigen::MatrixXd counts, Eigen::Index rows, Eigen::Index cols)
        : link_(link), free_(std::move(free)), counts_(std::move(counts)), beta_(Eigen::MatrixXd::Zero(rows, cols)) {}

    Eigen::Index dim() const { return static_cast<Eigen::Index>(free_.size()); }

    Eigen::MatrixXd expand(const Eigen::VectorXd& x) const {
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(beta_.rows(), beta_.cols());
        for (Eigen::Index k = 0; k < dim(); ++k) b(free_[k].d, free_[k].e) = x[k];
        return b;
    }

    Eigen::VectorXd compress(const Eigen::MatrixXd& b) const {
        Eigen::VectorXd x(dim());
        for (Eigen::Index k = 0; k < dim(); ++k) x[k] = b(free_[k].d, free_[k].e);
        return x;
    }

    // nullopt when x lies outside the valid region.
    std::optional<double> value(const Eigen::VectorXd& x) const {
        Eigen::MatrixXd pi;
        if (raw::pi_from_beta(expand(x), link_, pi)) return std::nullopt;
        double ll = 0.0;
        for (Eigen::Index e = 0; e < pi.cols(); ++e)
            for (Eigen::Index d = 0; d < pi.rows(); ++d)
                if (counts_(d, e) > 0.0) ll += counts_(d, e) * std::log(pi(d, e));
        return ll;
    }

    Eigen::VectorXd gradient(const Eigen::VectorXd& x) const {
        return compress(loglik_gradient(expand(x), link_, counts_));
    }

    Eigen::MatrixXd hessian(const Eigen::VectorXd& x, double step) const {
        const Eigen::Index n = dim();
        Eigen::MatrixXd h(n, n);
        Eigen::VectorXd xp = x, xm = x;
        for (Eigen::Index j = 0; j < n; ++j) {
            xp[j] = x[j] + step;
            xm[j] = x[j] - step;
            h.col(j) = (gradient(xp) - gradient(xm)) / (2.0 * step);
            xp[j] = x[j];
            xm[j] = x[j];
        }
        return 0.5 * (h + h.transpose());
    }

private:
    Link link_;
    std::vector<Coefficient> free_;
    Eigen::MatrixXd counts_;
    Eigen::MatrixXd beta_;
};

bool valid_start(const Eigen::MatrixXd& beta, Link link) {
    Eigen::MatrixXd pi;
    return !raw::pi_from_beta(beta, link, pi).has_value();
}

// Empirical probabilities used only to seed the optimizer. Cells that are
// empty get a half count so every log is finite.
Eigen::MatrixXd starting_pi(const Eigen::MatrixXd& counts) {
    Eigen::MatrixXd pi = counts;
    for (Eigen::Index e = 0; e < pi.cols(); ++e) {
        auto col = pi.col(e);
        if (col.sum() <= 0.0) {
            col.setConstant(1.0);
        } else if ((col.array() <= 0.0).any()) {
            col.array() += 0.5;
        }
        col /= col.sum();
    }
    return pi;
}

Eigen::MatrixXd independence_start(const Eigen::MatrixXd& pi, Link link, const ModelSpec& spec) {
    // Univariate rows from the margins, every association row zero on the
    // LML scale, then mapped to the requested link.
    Eigen::MatrixXd bg = raw::beta_from_pi(pi, Link::LML);
    for (Eigen::Index d = 0; d < bg.rows(); ++d)
        if (popcount(static_cast<Mask>(d)) > 1) bg.row(d).setZero();
    if (link == Link::LM) left_zeta_t(bg);
    for (const auto& c : spec.zeros()) bg(c.d, c.e) = 0.0;
    return bg;
}

double sup_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

} // namespace

double chi_square_upper_tail(double statistic, int df) {
    if (df <= 0) return statistic > 0.0 ? 0.0 : 1.0;
    boost::math::chi_squared dist(df);
    return boost::math::cdf(boost::math::complement(dist, std::max(statistic, 0.0)));
}

double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

FitResult fit(const ModelSpec& spec, const CountTable& data, const FitOptions& options) {
    const auto& responses = data.responses();
    const auto& covariates = data.covariates();
    spec.check(responses, covariates);

    const Link link = spec.link();
    Eigen::MatrixXd counts = data.as_real();
    if (options.smoothing) {
        if (!(*options.smoothing > 0.0)) throw ArgumentError("smoothing must be positive");
        counts.array() += *options.smoothing;
    }

    std::vector<Mask> excluded;
    for (Eigen::Index e = 0; e < counts.cols(); ++e) {
        if (counts.col(e).sum() <= 0.0) {
            if (!options.allow_missing_cells) {
                throw DataError("covariate cell " + covariates.format(e) +
                                " has no observations (use --allow-missing-cells to drop it)");
            }
            excluded.push_back(static_cast<Mask>(e));
        }
    }

    if (spec.zeros().empty()) {
        for (Eigen::Index e = 0; e < counts.cols(); ++e) {
            if (counts.col(e).sum() <= 0.0) continue;
            for (Eigen::Index d = 0; d < counts.rows(); ++d) {
                if (counts(d, e) <= 0.0) {
                    throw DataError("saturated fit has an empty cell at (" + responses.format(d) + ", " +
                                    covariates.format(e) + "); enable smoothing to fit it");
                }
            }
        }
    }

    Objective objective(link, spec.free_coefficients(responses, covariates), counts,
                        static_cast<Eigen::Index>(responses.size()), static_cast<Eigen::Index>(covariates.size()));

    // Starting point: the empirical saturated fit with constrained entries
    // dropped, else the independence model.
    const Eigen::MatrixXd pi0 = starting_pi(counts);
    Eigen::MatrixXd b0 = raw::beta_from_pi(pi0, link);
    for (const auto& c : spec.zeros()) b0(c.d, c.e) = 0.0;
    if (!valid_start(b0, link)) b0 = independence_start(pi0, link, spec);
    if (!valid_start(b0, link)) {
        throw NumericalError("no valid interior starting point for the constrained model");
    }

    Eigen::VectorXd x = objective.compress(b0);
    double ll = *objective.value(x);
    Eigen::VectorXd g = objective.gradient(x);
    int iter = 0;
    while (iter < options.max_iterations && sup_norm(g) > options.gradient_tolerance) {
        ++iter;
        const Eigen::MatrixXd info = -objective.hessian(x, options.hessian_step);
        // Newton direction on the observed information; ridge it when the
        // information is not positive definite away from the optimum.
        Eigen::VectorXd dir;
        double ridge = 0.0;
        const double scale = std::max(1.0, info.diagonal().cwiseAbs().maxCoeff());
        for (int attempt = 0; attempt < 40; ++attempt) {
            Eigen::MatrixXd a = info;
            a.diagonal().array() += ridge;
            Eigen::LLT<Eigen::MatrixXd> llt(a);
            if (llt.info() == Eigen::Success) {
                dir = llt.solve(g);
                if (dir.allFinite()) break;
            }
            dir.resize(0);
            ridge = ridge == 0.0 ? 1e-10 * scale : ridge * 10.0;
        }
        if (dir.size() == 0) dir = g / scale;

        double t = 1.0;
        bool moved = false;
        for (int h = 0; h <= options.max_halvings; ++h, t *= 0.5) {
            Eigen::VectorXd trial = x + t * dir;
            auto v = objective.value(trial);
            if (v && *v >= ll - 1e-12 * std::abs(ll)) {
                moved = (trial - x).cwiseAbs().maxCoeff() > 0.0;
                x = trial;
                ll = *v;
                break;
            }
        }
        g = objective.gradient(x);
        if (!moved) break;
    }

    const Eigen::MatrixXd beta = objective.expand(x);
    Eigen::MatrixXd pi;
    raw::pi_from_beta(beta, link, pi);

    FitResult result{
        .spec = spec,
        .beta_hat = ParamMatrix(coeff_kind(link), responses, covariates, beta),
        .pi_hat = ParamMatrix(ParamKind::PI, responses, covariates, pi),
        .free = spec.free_coefficients(responses, covariates),
    };
    result.loglik = ll;
    result.iterations = iter;
    result.gradient_norm = sup_norm(g);
    result.converged = result.gradient_norm <= options.gradient_tolerance;
    result.smoothing = options.smoothing.value_or(0.0);
    result.excluded_cells = std::move(excluded);
    result.df = static_cast<int>(spec.df());

    if (objective.dim() > 0) {
        const Eigen::MatrixXd info = -objective.hessian(x, options.hessian_step);
        Eigen::LLT<Eigen::MatrixXd> llt(info);
        if (llt.info() == Eigen::Success) {
            Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
            if (cov.allFinite()) result.covariance = 0.5 * (cov + cov.transpose());
        }
    } else {
        result.covariance = Eigen::MatrixXd(0, 0);
    }

    for (const auto& w : wald_tests(result)) {
        result.std_errors.push_back(w.se);
        result.wald_p.push_back(w.p);
    }
    result.deviance = deviance(result, data);
    result.deviance_p = chi_square_upper_tail(result.deviance, result.df);
    return result;
}

double deviance(const FitResult& fit, const CountTable& data) {
    const auto& pi = fit.pi_hat.values();
    if (pi.rows() != data.counts().rows() || pi.cols() != data.counts().cols()) {
        throw ShapeError("fitted table and count table shapes differ");
    }
    Eigen::MatrixXd n = data.as_real();
    n.array() += fit.smoothing;
    double g2 = 0.0;
    for (Eigen::Index e = 0; e < n.cols(); ++e) {
        const double total = n.col(e).sum();
        for (Eigen::Index d = 0; d < n.rows(); ++d)
            if (n(d, e) > 0.0) g2 += n(d, e) * std::log(n(d, e) / (total * pi(d, e)));
    }
    return std::max(0.0, 2.0 * g2);
}

std::vector<WaldTest> wald_tests(const FitResult& fit) {
    std::vector<WaldTest> out;
    out.reserve(fit.free.size());
    for (std::size_t k = 0; k < fit.free.size(); ++k) {
        WaldTest w{fit.free[k], fit.beta_hat(fit.free[k].d, fit.free[k].e), std::nullopt, std::nullopt};
        if (fit.covariance) {
            const double var = (*fit.covariance)(k, k);
            if (var > 0.0 && std::isfinite(var)) {
                w.se = std::sqrt(var);
                w.p = normal_two_sided_p(w.estimate / *w.se);
            }
        }
        out.push_back(w);
    }
    return out;
}

CountTable simulate(const ParamMatrix& beta, const std::vector<std::int64_t>& column_totals, std::uint64_t seed) {
    const ParamMatrix pi = pi_from_beta(beta);
    const auto& p = pi.values();
    if (column_totals.size() != static_cast<std::size_t>(p.cols())) {
        throw ShapeError("expected " + std::to_string(p.cols()) + " column totals, got " +
                         std::to_string(column_totals.size()));
    }
    std::mt19937_64 rng(seed);
    CountMatrix counts = CountMatrix::Zero(p.rows(), p.cols());
    for (Eigen::Index e = 0; e < p.cols(); ++e) {
        if (column_totals[e] < 0) throw ArgumentError("column totals must be nonnegative");
        // Sequential binomial draws give one multinomial draw per column.
        std::int64_t left = column_totals[e];
        double mass = 1.0;
        for (Eigen::Index d = 0; d < p.rows() && left > 0; ++d) {
            if (d == p.rows() - 1) {
                counts(d, e) = left;
                break;
            }
            const double q = mass > 0.0 ? std::clamp(p(d, e) / mass, 0.0, 1.0) : 1.0;
            std::binomial_distribution<std::int64_t> draw(left, q);
            const std::int64_t k = draw(rng);
            counts(d, e) = k;
            left -= k;
            mass -= p(d, e);
        }
    }
    return CountTable(pi.responses(), pi.covariates(), std::move(counts));
}

CoefficientSummary induced_lm_coefficients(const FitResult& fit) {
    const auto& b = fit.beta_hat;
    const bool lml = b.kind() == ParamKind::BETA_GAMMA;
    ParamMatrix est = lml ? beta_mu_from_beta_gamma(b) : b;
    const auto rows = b.values().rows(), cols = b.values().cols();
    Eigen::MatrixXd se = Eigen::MatrixXd::Constant(rows, cols, std::numeric_limits<double>::quiet_NaN());
    if (fit.covariance) {
        const auto n = static_cast<Eigen::Index>(fit.free.size());
        for (Mask d = 1; d < static_cast<Mask>(rows); ++d) {
            for (Mask e = 0; e < static_cast<Mask>(cols); ++e) {
                Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
                for (Eigen::Index k = 0; k < n; ++k) {
                    const auto& c = fit.free[k];
                    if (c.e == e && (lml ? (c.d & ~d) == 0 : c.d == d)) a[k] = 1.0;
                }
                const double var = a.dot(*fit.covariance * a);
                if (a.any() && var > 0.0) se(d, e) = std::sqrt(var);
            }
        }
    }
    return {std::move(est), std::move(se)};
}

} // namespace lmlreg
