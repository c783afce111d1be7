#include "doctest.h"
#include "support.hpp"

#include "lmlreg/errors.hpp"
#include "lmlreg/params.hpp"

#include <cmath>
#include <random>

using namespace lmlreg;

namespace {

ParamMatrix column(ParamKind kind, int p, std::vector<double> values) {
    Eigen::MatrixXd m(values.size(), 1);
    for (std::size_t i = 0; i < values.size(); ++i) m(i, 0) = values[i];
    return ParamMatrix(kind, SubsetLattice(p), SubsetLattice(1), m.replicate(1, 2));
}

} // namespace

TEST_CASE("mu from pi examples") {
    const auto mu1 = mu_from_pi(column(ParamKind::PI, 1, {0.7, 0.3}));
    CHECK(mu1(0, 0) == doctest::Approx(1.0));
    CHECK(mu1(1, 0) == doctest::Approx(0.3));

    const auto mu2 = mu_from_pi(column(ParamKind::PI, 2, {0.4, 0.2, 0.3, 0.1}));
    CHECK(mu2(0, 1) == doctest::Approx(1.0));
    CHECK(mu2(1, 1) == doctest::Approx(0.3));
    CHECK(mu2(2, 1) == doctest::Approx(0.4));
    CHECK(mu2(3, 1) == doctest::Approx(0.1));

    const auto uni = mu_from_pi(column(ParamKind::PI, 2, {0.25, 0.25, 0.25, 0.25}));
    CHECK(uni(3, 0) == doctest::Approx(0.25));
    CHECK(uni(1, 0) == doctest::Approx(0.5));

    const auto back = pi_from_mu(mu2);
    CHECK(back(0, 0) == doctest::Approx(0.4));
    CHECK(back(1, 0) == doctest::Approx(0.2));
    CHECK(back(2, 0) == doctest::Approx(0.3));
    CHECK(back(3, 0) == doctest::Approx(0.1));
}

TEST_CASE("pi validation") {
    CHECK_THROWS_AS(mu_from_pi(column(ParamKind::PI, 1, {0.8, 0.3})), ValidationError);
    CHECK_THROWS_AS(mu_from_pi(column(ParamKind::PI, 1, {1.0, 0.0})), ValidationError);
    CHECK_THROWS_AS(ParamMatrix(ParamKind::PI, SubsetLattice(2), SubsetLattice(1), Eigen::MatrixXd::Ones(3, 2)),
                    ShapeError);
}

TEST_CASE("boundary error names the cell") {
    try {
        pi_from_mu(column(ParamKind::MU, 2, {1.0, 0.9, 0.9, 0.5}));
        FAIL("expected a boundary error");
    } catch (const BoundaryError& e) {
        CHECK(e.row_mask() == 0);
        CHECK(e.value() == doctest::Approx(-0.3));
    }
}

TEST_CASE("gamma from mu") {
    const auto g = gamma_from_mu(column(ParamKind::MU, 2, {1.0, 0.3, 0.4, 0.1}));
    CHECK(g(3, 0) == doctest::Approx(-0.18232155679395).epsilon(1e-12));
    CHECK(g(1, 0) == doctest::Approx(std::log(0.3)));
    CHECK(g(0, 0) == 0.0);

    const auto indep = gamma_from_mu(column(ParamKind::MU, 2, {1.0, 0.3, 0.6, 0.18}));
    CHECK(std::abs(indep(3, 0)) < 1e-14);

    const auto mu = mu_from_gamma(column(ParamKind::GAMMA, 1, {0.0, std::log(0.3)}));
    CHECK(mu(1, 1) == doctest::Approx(0.3));

    const auto degenerate = mu_from_gamma(column(ParamKind::GAMMA, 2, {0.0, 0.0, 0.0, 0.0}));
    CHECK_THROWS_AS(pi_from_mu(degenerate), BoundaryError);
    CHECK_THROWS_AS(gamma_from_mu(column(ParamKind::MU, 1, {1.0, 0.0})), Error);
}

TEST_CASE("coefficient algebra") {
    const SubsetLattice V(1), U(testing::labels("ha"));
    Eigen::MatrixXd theta(2, 4);
    theta << 0, 0, 0, 0, 0.5, 0.9, 1.4, 2.6;
    const auto beta = coeffs_from_link(ParamMatrix(ParamKind::LOG_MU, V, U, theta));
    CHECK(beta.kind() == ParamKind::BETA_MU);
    CHECK(beta(1, 0) == doctest::Approx(0.5));
    CHECK(beta(1, 1) == doctest::Approx(0.4));
    CHECK(beta(1, 2) == doctest::Approx(0.9));
    CHECK(beta(1, 0) + beta(1, 1) + beta(1, 2) + beta(1, 3) == doctest::Approx(theta(1, 3)));
    CHECK(testing::sup(link_from_coeffs(beta).values() - theta) < 1e-12);

    std::mt19937_64 rng(3);
    std::normal_distribution<double> n01;
    const SubsetLattice V3(3), U3(3);
    Eigen::MatrixXd r(8, 8);
    for (auto i = 0; i < r.size(); ++i) r.data()[i] = n01(rng);
    r.row(0).setZero();
    const ParamMatrix g(ParamKind::GAMMA, V3, U3, r);
    CHECK(testing::sup(link_from_coeffs(coeffs_from_link(g)).values() - r) < 1e-12);
}

TEST_CASE("beta gamma from beta mu on published estimates") {
    const SubsetLattice V(testing::labels("bc")), U(testing::labels("h"));
    Eigen::MatrixXd bmu(4, 2);
    bmu << 0, 0, -4.573, 2.621, -4.476, 1.056, -7.892, 2.941;
    const auto bg = beta_gamma_from_beta_mu(ParamMatrix(ParamKind::BETA_MU, V, U, bmu));
    CHECK(std::abs(bg(3, 1) - (-0.737)) < 0.0015);
    CHECK(std::abs(bg(3, 0) - 1.158) < 0.0015);
    CHECK(bg(1, 0) == bmu(1, 0));
    CHECK(bg(2, 1) == bmu(2, 1));
    CHECK(testing::sup(beta_mu_from_beta_gamma(bg).values() - bmu) < 1e-14);
}

TEST_CASE("pi from beta") {
    const SubsetLattice V(2), U(1);
    CHECK_THROWS_AS(pi_from_beta(ParamMatrix(ParamKind::BETA_GAMMA, V, U, Eigen::MatrixXd::Zero(4, 2))),
                    BoundaryError);
    const Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(4, 2, 0.25);
    for (Link link : {Link::LM, Link::LML}) {
        const auto beta = beta_from_pi(testing::pi_matrix(uniform, V, U), link);
        CHECK(testing::sup(pi_from_beta(beta).values() - uniform) < 1e-14);
    }
}

TEST_CASE("full chain round trips against dense oracle") {
    std::mt19937_64 rng(2024);
    for (int draw = 0; draw < 60; ++draw) {
        const int p = 1 + draw % 5, q = 1 + draw % 3;
        const SubsetLattice V(p), U(q);
        const Eigen::MatrixXd pi = testing::random_pi(p, q, rng);
        for (Link link : {Link::LM, Link::LML}) {
            const auto beta = beta_from_pi(testing::pi_matrix(pi, V, U), link);
            CHECK(testing::sup(beta.values() - testing::dense_beta(pi, link, V, U)) < 1e-10);
            CHECK(beta.values().row(0).cwiseAbs().maxCoeff() == 0.0);
            CHECK(testing::sup(pi_from_beta(beta).values() - pi) < 1e-11);
        }
        const auto bmu = beta_from_pi(testing::pi_matrix(pi, V, U), Link::LM);
        const auto bg = beta_from_pi(testing::pi_matrix(pi, V, U), Link::LML);
        CHECK(testing::sup(beta_gamma_from_beta_mu(bmu).values() - bg.values()) < 1e-10);
    }
}

TEST_CASE("kind names round trip") {
    for (ParamKind k : {ParamKind::PI, ParamKind::MU, ParamKind::LOG_MU, ParamKind::GAMMA, ParamKind::BETA_MU,
                        ParamKind::BETA_GAMMA, ParamKind::REF_B}) {
        CHECK(parse_kind(to_string(k)) == k);
    }
    CHECK(parse_link("lm") == Link::LM);
    CHECK(parse_link("LML") == Link::LML);
    CHECK_THROWS(parse_link("logit"));
}
