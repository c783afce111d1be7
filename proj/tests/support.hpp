#pragma once

#include "lmlreg/inference.hpp"
#include "lmlreg/lattice.hpp"
#include "lmlreg/params.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace testing {

inline std::vector<std::string> labels(const std::string& letters) {
    std::vector<std::string> out;
    for (char c : letters) out.emplace_back(1, c);
    return out;
}

inline lmlreg::SubsetLattice lattice(int n, char first = 'a') {
    std::string letters;
    for (int i = 0; i < n; ++i) letters += static_cast<char>(first + i);
    return lmlreg::SubsetLattice(labels(letters));
}

// Strictly positive probability columns with entries bounded away from zero.
inline Eigen::MatrixXd random_pi(int p, int q, std::mt19937_64& rng, double floor = 0.05) {
    std::uniform_real_distribution<double> unif(floor, 1.0);
    Eigen::MatrixXd pi(1 << p, 1 << q);
    for (Eigen::Index j = 0; j < pi.cols(); ++j) {
        for (Eigen::Index i = 0; i < pi.rows(); ++i) pi(i, j) = unif(rng);
        pi.col(j) /= pi.col(j).sum();
    }
    return pi;
}

inline lmlreg::ParamMatrix pi_matrix(const Eigen::MatrixXd& pi, const lmlreg::SubsetLattice& V,
                                     const lmlreg::SubsetLattice& U) {
    return lmlreg::ParamMatrix(lmlreg::ParamKind::PI, V, U, pi);
}

inline double sup(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

// Dense reference for the coefficient chain, built from explicit Z and M.
inline Eigen::MatrixXd dense_beta(const Eigen::MatrixXd& pi, lmlreg::Link link, const lmlreg::SubsetLattice& V,
                                  const lmlreg::SubsetLattice& U) {
    const Eigen::MatrixXd mu = V.zeta_matrix() * pi;
    Eigen::MatrixXd theta = mu.array().log().matrix();
    if (link == lmlreg::Link::LML) theta = V.mobius_matrix().transpose() * theta;
    return theta * U.mobius_matrix();
}

inline Eigen::MatrixXd dense_pi(const Eigen::MatrixXd& beta, lmlreg::Link link, const lmlreg::SubsetLattice& V,
                                const lmlreg::SubsetLattice& U) {
    Eigen::MatrixXd theta = beta * U.zeta_matrix();
    if (link == lmlreg::Link::LML) theta = V.zeta_matrix().transpose() * theta;
    return V.mobius_matrix() * theta.array().exp().matrix();
}

// Multinomial counts drawn cell by cell with std::discrete_distribution.
inline lmlreg::CountTable draw_table(const Eigen::MatrixXd& pi, const std::vector<std::int64_t>& totals,
                                     const lmlreg::SubsetLattice& V, const lmlreg::SubsetLattice& U,
                                     std::mt19937_64& rng) {
    lmlreg::CountMatrix n = lmlreg::CountMatrix::Zero(pi.rows(), pi.cols());
    for (Eigen::Index j = 0; j < pi.cols(); ++j) {
        std::vector<double> w(pi.col(j).data(), pi.col(j).data() + pi.rows());
        std::discrete_distribution<int> cell(w.begin(), w.end());
        for (std::int64_t k = 0; k < totals[j]; ++k) ++n(cell(rng), j);
    }
    return lmlreg::CountTable(V, U, n);
}

} // namespace testing

namespace testing {

// Nelder-Mead minimizer with restarts around the incumbent.
template <class F>
Eigen::VectorXd nelder_mead(F f, Eigen::VectorXd x0, double scale, int iterations = 4000, int restarts = 6) {
    const Eigen::Index n = x0.size();
    Eigen::VectorXd best = x0;
    double fbest = f(best);
    for (int r = 0; r < restarts; ++r) {
        std::vector<Eigen::VectorXd> s(n + 1, best);
        std::vector<double> fs(n + 1);
        for (Eigen::Index i = 0; i < n; ++i) s[i + 1][i] += scale;
        for (Eigen::Index i = 0; i <= n; ++i) fs[i] = f(s[i]);
        for (int it = 0; it < iterations; ++it) {
            std::vector<Eigen::Index> idx(n + 1);
            for (Eigen::Index i = 0; i <= n; ++i) idx[i] = i;
            std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return fs[a] < fs[b]; });
            std::vector<Eigen::VectorXd> s2;
            std::vector<double> f2;
            for (auto i : idx) {
                s2.push_back(s[i]);
                f2.push_back(fs[i]);
            }
            s = std::move(s2);
            fs = std::move(f2);
            if (fs[n] - fs[0] < 1e-14 * (1.0 + std::abs(fs[0]))) break;
            Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
            for (Eigen::Index i = 0; i < n; ++i) c += s[i];
            c /= static_cast<double>(n);
            const Eigen::VectorXd xr = c + (c - s[n]);
            const double fr = f(xr);
            if (fr < fs[0]) {
                const Eigen::VectorXd xe = c + 2.0 * (c - s[n]);
                const double fe = f(xe);
                if (fe < fr) {
                    s[n] = xe;
                    fs[n] = fe;
                } else {
                    s[n] = xr;
                    fs[n] = fr;
                }
            } else if (fr < fs[n - 1]) {
                s[n] = xr;
                fs[n] = fr;
            } else {
                const Eigen::VectorXd xc = c + 0.5 * (s[n] - c);
                const double fc = f(xc);
                if (fc < fs[n]) {
                    s[n] = xc;
                    fs[n] = fc;
                } else {
                    for (Eigen::Index i = 1; i <= n; ++i) {
                        s[i] = s[0] + 0.5 * (s[i] - s[0]);
                        fs[i] = f(s[i]);
                    }
                }
            }
        }
        if (fs[0] < fbest) {
            fbest = fs[0];
            best = s[0];
        }
        scale *= 0.3;
    }
    return best;
}

// Log-likelihood of beta through the dense chain; -inf outside the valid region.
inline double dense_loglik(const Eigen::MatrixXd& beta, lmlreg::Link link, const lmlreg::CountTable& data) {
    const Eigen::MatrixXd pi = dense_pi(beta, link, data.responses(), data.covariates());
    double ll = 0.0;
    for (Eigen::Index j = 0; j < pi.cols(); ++j) {
        for (Eigen::Index i = 0; i < pi.rows(); ++i) {
            const auto n = data(static_cast<lmlreg::Mask>(i), static_cast<lmlreg::Mask>(j));
            if (pi(i, j) <= 0.0) return -std::numeric_limits<double>::infinity();
            if (n > 0) ll += static_cast<double>(n) * std::log(pi(i, j));
        }
    }
    return ll;
}

} // namespace testing

namespace testing {

// π whose columns factor as independent blocks on responses a_mask and its complement.
inline Eigen::MatrixXd block_product_pi(int p, int q, lmlreg::Mask a_mask, std::mt19937_64& rng) {
    const lmlreg::Mask full = (1u << p) - 1, b_mask = full & ~a_mask;
    const int pa = __builtin_popcount(a_mask), pb = __builtin_popcount(b_mask);
    const Eigen::MatrixXd pa_cells = random_pi(pa, q, rng, 0.1), pb_cells = random_pi(pb, q, rng, 0.1);
    auto compress = [&](lmlreg::Mask y, lmlreg::Mask m) {
        lmlreg::Mask out = 0;
        int k = 0;
        for (int i = 0; i < p; ++i)
            if ((m >> i) & 1u) out |= ((y >> i) & 1u) << k++;
        return out;
    };
    Eigen::MatrixXd pi(1 << p, 1 << q);
    for (Eigen::Index j = 0; j < pi.cols(); ++j)
        for (lmlreg::Mask y = 0; y <= full; ++y) pi(y, j) = pa_cells(compress(y, a_mask), j) * pb_cells(compress(y, b_mask), j);
    return pi;
}

// Responses b,c,d,r; covariate h. Zero pattern of the selected single-covariate model.
inline lmlreg::ModelSpec single_covariate_spec() {
    lmlreg::ModelSpec spec(lmlreg::Link::LML);
    const lmlreg::Mask b = 1, c = 2, d = 4, r = 8, h = 1;
    for (lmlreg::Mask row : {b | c, d | r}) spec.add_zero({row, h});
    for (lmlreg::Mask row : {b | d, b | r, c | r, b | c | d, c | d | r})
        for (lmlreg::Mask e : {0u, h}) spec.add_zero({row, e});
    return spec;
}

// Responses b,c,d,r; covariates h,a. Zero pattern of the selected two-covariate model.
inline lmlreg::ModelSpec two_covariate_spec() {
    lmlreg::ModelSpec spec(lmlreg::Link::LML);
    const lmlreg::Mask b = 1, c = 2, d = 4, r = 8, h = 1, a = 2;
    for (lmlreg::Mask row = 1; row < 16; ++row) spec.add_zero({row, h | a});
    for (lmlreg::Mask row : {b | c, c | r, c | d | r}) spec.add_zero({row, a});
    for (lmlreg::Mask row : {b | d, b | c | d, b | c | r, b | d | r, b | c | d | r})
        for (lmlreg::Mask e : {0u, h, a}) spec.add_zero({row, e});
    return spec;
}

} // namespace testing
