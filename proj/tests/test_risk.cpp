#include "doctest.h"
#include "support.hpp"

#include "lmlreg/errors.hpp"
#include "lmlreg/risk.hpp"

#include <cmath>
#include <random>

using namespace lmlreg;

namespace {

ParamMatrix beta_mu_of(const Eigen::MatrixXd& pi, const SubsetLattice& V, const SubsetLattice& U) {
    return beta_from_pi(testing::pi_matrix(pi, V, U), Link::LM);
}

bool straddles(Mask d, Mask a) { return (d & a) && (d & ~a); }

} // namespace

TEST_CASE("reference coefficients on small patterns") {
    std::mt19937_64 rng(1);
    const SubsetLattice V(testing::labels("bcd")), U(testing::labels("h"));
    const auto bmu = beta_mu_of(testing::random_pi(3, 1, rng), V, U);
    const auto ref = reference_coeffs(bmu);
    const Mask b = 1, c = 2, d = 4;
    for (Mask e : {0u, 1u}) {
        CHECK(ref(b | d, e) == doctest::Approx(bmu(b, e) + bmu(d, e)));
        CHECK(ref(b | c | d, e) == doctest::Approx(-bmu(b, e) - bmu(c, e) - bmu(d, e) + bmu(b | c, e) + bmu(b | d, e) +
                                                   bmu(c | d, e)));
        CHECK(ref(b, e) == 0.0);
    }
    const auto bg = beta_gamma_from_beta_mu(bmu);
    for (Mask dd = 0; dd < 8; ++dd)
        if (popcount(dd) > 1)
            for (Mask e : {0u, 1u}) CHECK(std::abs(bg(dd, e) - (bmu(dd, e) - ref(dd, e))) < 1e-12);
}

TEST_CASE("relative risks from coefficients and from probabilities") {
    const SubsetLattice V(testing::labels("bc")), U(testing::labels("h"));
    Eigen::MatrixXd bmu(4, 2);
    bmu << 0, 0, -4.573, 2.621, -4.476, 1.056, -7.892, 2.941;
    const ParamMatrix table(ParamKind::BETA_MU, V, U, bmu);
    CHECK(log_relative_risk(table, 0b01, 0, 0) == doctest::Approx(2.621));
    CHECK(std::exp(log_relative_risk(table, 0b11, 0, 0)) == doctest::Approx(18.9).epsilon(0.005));
    CHECK(log_relative_risk(table, 0, 0, 0) == 0.0);
    CHECK_THROWS_AS(log_relative_risk(table, 0b01, 0, 1), ArgumentError);

    std::mt19937_64 rng(2);
    const SubsetLattice V3(3), U3(3);
    const Eigen::MatrixXd pi = testing::random_pi(3, 3, rng);
    const auto b3 = beta_mu_of(pi, V3, U3);
    const auto mu = mu_from_pi(testing::pi_matrix(pi, V3, U3));
    for (Mask d = 1; d < 8; ++d)
        for (int u = 0; u < 3; ++u)
            for (Mask e = 0; e < 8; ++e)
                if (!((e >> u) & 1u))
                    CHECK(std::abs(log_relative_risk(b3, d, u, e) - log_relative_risk_from_mu(mu, d, u, e)) < 1e-10);
}

TEST_CASE("reference relative risk by both routes") {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 20; ++rep) {
        const int p = 2 + rep % 3, q = 1 + rep % 3;
        const SubsetLattice V(p), U(q);
        const auto bmu = beta_mu_of(testing::random_pi(p, q, rng), V, U);
        const auto bg = beta_gamma_from_beta_mu(bmu);
        for (Mask d = 0; d < V.size(); ++d) {
            if (popcount(d) < 2) continue;
            for (int u = 0; u < q; ++u)
                for (Mask e = 0; e < U.size(); ++e) {
                    if ((e >> u) & 1u) continue;
                    const double ref = log_reference_rr(bmu, d, u, e);
                    CHECK(std::abs(ref - log_reference_rr_product(bmu, d, u, e)) < 1e-10);
                    CHECK(std::abs(log_rr_ratio(bg, d, u, e) - (log_relative_risk(bmu, d, u, e) - ref)) < 1e-10);
                }
        }
        CHECK_THROWS_AS(log_reference_rr(bmu, 1, 0, 0), ArgumentError);
    }

    const SubsetLattice V(testing::labels("bd")), U(testing::labels("h"));
    const auto bmu = beta_mu_of(testing::random_pi(2, 1, rng), V, U);
    CHECK(log_reference_rr(bmu, 0b11, 0, 0) ==
          doctest::Approx(log_relative_risk(bmu, 0b01, 0, 0) + log_relative_risk(bmu, 0b10, 0, 0)));

    const SubsetLattice V3(testing::labels("bcd"));
    const auto b3 = beta_mu_of(testing::random_pi(3, 1, rng), V3, U);
    auto lrr = [&](Mask d) { return log_relative_risk(b3, d, 0, 0); };
    CHECK(log_reference_rr(b3, 0b111, 0, 0) ==
          doctest::Approx(lrr(0b011) + lrr(0b101) + lrr(0b110) - lrr(0b001) - lrr(0b010) - lrr(0b100)));
}

TEST_CASE("independent blocks zero every straddling association") {
    std::mt19937_64 rng(4);
    for (int rep = 0; rep < 20; ++rep) {
        const int p = 2 + rep % 3, q = 1 + rep % 2;
        const Mask a = 1u | (rep % 2 ? 0b100u & ((1u << p) - 1) : 0u);
        const SubsetLattice V(p), U(q);
        const auto bmu = beta_mu_of(testing::block_product_pi(p, q, a, rng), V, U);
        const auto bg = beta_gamma_from_beta_mu(bmu);
        const auto ref = reference_coeffs(bmu);
        for (Mask d = 0; d < V.size(); ++d) {
            if (!straddles(d, a)) continue;
            for (Mask e = 0; e < U.size(); ++e) {
                CHECK(std::abs(bg(d, e)) <= 1e-10);
                CHECK(std::abs(bmu(d, e) - ref(d, e)) <= 1e-10);
            }
            for (int u = 0; u < q; ++u)
                for (Mask e = 0; e < U.size(); ++e)
                    if (!((e >> u) & 1u))
                        CHECK(std::abs(log_relative_risk(bmu, d, u, e) - log_reference_rr(bmu, d, u, e)) <= 1e-10);
        }
    }
}

TEST_CASE("coefficient and relative-risk forms of no-effect agree") {
    std::mt19937_64 rng(5);
    const SubsetLattice V(2), U(2);
    const Mask d = 0b11;
    int built = 0;
    for (int attempt = 0; attempt < 200 && built < 20; ++attempt) {
        Eigen::MatrixXd bg = testing::dense_beta(testing::random_pi(2, 2, rng), Link::LML, V, U);
        const int u = attempt % 2;
        for (Mask e = 0; e < 4; ++e)
            if ((e >> u) & 1u) bg(d, e) = 0.0;
        const Eigen::MatrixXd pi = testing::dense_pi(bg, Link::LML, V, U);
        if (pi.minCoeff() <= 0.0) continue;
        ++built;
        const auto bmu = beta_mu_of(pi, V, U);
        const auto ref = reference_coeffs(bmu);
        for (Mask e = 0; e < 4; ++e) {
            if ((e >> u) & 1u) CHECK(std::abs(bmu(d, e) - ref(d, e)) < 1e-10);
            if (!((e >> u) & 1u))
                CHECK(std::abs(log_relative_risk(bmu, d, u, e) - log_reference_rr(bmu, d, u, e)) < 1e-10);
        }
    }
    CHECK(built == 20);

    const auto bmu = beta_mu_of(testing::random_pi(2, 2, rng), V, U);
    CHECK(std::abs(log_relative_risk(bmu, d, 0, 0) - log_reference_rr(bmu, d, 0, 0)) > 1e-6);
}

TEST_CASE("additive relative risks and constant odds ratios are different constraints") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> unif(0.15, 0.6);
    const SubsetLattice V(testing::labels("bd")), U(testing::labels("h"));
    auto log_or = [](const Eigen::MatrixXd& pi, int j) {
        return std::log(pi(0, j) * pi(3, j) / (pi(1, j) * pi(2, j)));
    };
    bool nine_not_ten = false, ten_not_nine = false;
    for (int attempt = 0; attempt < 500 && !(nine_not_ten && ten_not_nine); ++attempt) {
        const Eigen::MatrixXd base = testing::random_pi(2, 1, rng, 0.1);
        const double mb = unif(rng), md = unif(rng);
        Eigen::MatrixXd pi = base;
        {
            // Additive log relative risk: the joint probability in cell h scales with the margins.
            const Eigen::MatrixXd mu0 = V.zeta_matrix() * base.col(0);
            const double mbd = mu0(3) * (mb / mu0(1)) * (md / mu0(2));
            pi(3, 1) = mbd;
            pi(1, 1) = mb - mbd;
            pi(2, 1) = md - mbd;
            pi(0, 1) = 1.0 - mb - md + mbd;
            if (pi.col(1).minCoeff() > 0.0) {
                const auto bmu = beta_mu_of(pi, V, U);
                CHECK(std::abs(bmu(3, 1) - bmu(1, 1) - bmu(2, 1)) < 1e-10);
                if (std::abs(log_or(pi, 1) - log_or(pi, 0)) > 1e-3) nine_not_ten = true;
            }
        }
        {
            // Constant odds ratio: solve for the joint cell given margins and the odds ratio of cell 0.
            const double psi = std::exp(log_or(base, 0));
            const double a = psi - 1.0, bq = -(psi * (mb + md) + (1.0 - mb - md)), cq = psi * mb * md;
            const double x = std::abs(a) < 1e-12 ? -cq / bq : (-bq - std::sqrt(bq * bq - 4 * a * cq)) / (2 * a);
            Eigen::MatrixXd pj = base;
            pj(3, 1) = x;
            pj(1, 1) = mb - x;
            pj(2, 1) = md - x;
            pj(0, 1) = 1.0 - mb - md + x;
            if (pj.col(1).minCoeff() > 0.0) {
                CHECK(std::abs(log_or(pj, 1) - log_or(pj, 0)) < 1e-8);
                const auto bmu = beta_mu_of(pj, V, U);
                if (std::abs(bmu(3, 1) - bmu(1, 1) - bmu(2, 1)) > 1e-3) ten_not_nine = true;
            }
        }
    }
    CHECK(nine_not_ten);
    CHECK(ten_not_nine);
}

TEST_CASE("response independencies from the single-covariate model") {
    const SubsetLattice V(testing::labels("bcdr")), U(testing::labels("h"));
    const auto found = implied_response_independencies(testing::single_covariate_spec(), V, U);
    std::vector<std::pair<Mask, Mask>> pairs;
    for (const auto& x : found) pairs.emplace_back(x.a, x.b);
    CHECK(pairs == std::vector<std::pair<Mask, Mask>>{{0b0001, 0b0100}, {0b0001, 0b1000}, {0b0010, 0b1000}});

    CHECK(implied_response_independencies(ModelSpec(Link::LML), V, U).empty());

    ModelSpec all(Link::LML);
    for (Mask d = 0; d < 16; ++d)
        if (popcount(d) > 1)
            for (Mask e = 0; e < 2; ++e) all.add_zero({d, e});
    std::size_t bipartitions = 0;
    for (Mask d = 0; d < 16; ++d)
        if (popcount(d) > 1) bipartitions += (1u << (popcount(d) - 1)) - 1;
    CHECK(implied_response_independencies(all, V, U).size() == bipartitions);
}

TEST_CASE("response independencies from fitted values") {
    std::mt19937_64 rng(7);
    const SubsetLattice V(3), U(1);
    const auto bg = beta_from_pi(testing::pi_matrix(testing::block_product_pi(3, 1, 0b001, rng), V, U), Link::LML);
    const auto found = implied_response_independencies(bg);
    std::vector<std::pair<Mask, Mask>> pairs;
    for (const auto& x : found) pairs.emplace_back(x.a, x.b);
    CHECK(pairs == std::vector<std::pair<Mask, Mask>>{{0b001, 0b010}, {0b001, 0b100}, {0b001, 0b110}});
}

TEST_CASE("covariate independencies") {
    const SubsetLattice V(testing::labels("bcdr")), U(testing::labels("ha"));
    ModelSpec spec(Link::LML);
    for (Mask d : {Mask{0b0001}, Mask{0b0100}, Mask{0b0101}})
        for (Mask e : {Mask{0b01}, Mask{0b11}}) spec.add_zero({d, e});
    const auto found = implied_covariate_independencies(spec, V, U);
    REQUIRE(found.size() == 3);
    CHECK(found.back() == CovariateIndependence{0b0101, 0b01});
    CHECK(implied_covariate_independencies(ModelSpec(Link::LML), V, U).empty());

    const auto two = testing::two_covariate_spec();
    for (const auto& x : implied_covariate_independencies(two, V, U)) CHECK(x.d != 0b0101);
    bool bd = false;
    for (const auto& x : implied_response_independencies(two, V, U)) bd |= (x.a == 0b0001 && x.b == 0b0100);
    CHECK(bd);
}

TEST_CASE("risk report shape") {
    std::mt19937_64 rng(8);
    const SubsetLattice V(2), U(1);
    const auto bmu = beta_mu_of(testing::random_pi(2, 1, rng), V, U);
    const auto report = risk_report(bmu);
    REQUIRE(report.size() == 3);
    CHECK_FALSE(report[0].log_ref_rr);
    CHECK(report[2].log_ref_rr);
    CHECK(*report[2].log_ratio == doctest::Approx(report[2].log_rr - *report[2].log_ref_rr));
}
