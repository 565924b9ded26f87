#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "critpt/errors.hpp"
#include "critpt/serialize.hpp"
#include "critpt/spectral_model.hpp"

#include "oracles.hpp"

#include <cmath>

using namespace critpt;

namespace {

Eigen::VectorXi mi(std::initializer_list<int> vals) {
    Eigen::VectorXi v(static_cast<Eigen::Index>(vals.size()));
    int i = 0;
    for (int x : vals) v[i++] = x;
    return v;
}

} // namespace

TEST_CASE("spectral moments of the unit gaussian family") {
    SpectralModel m = SpectralModel::gaussian_iso(1, 1.0);
    CHECK(spectral_moment(m, mi({1})) == 0.0); // odd moment of an even density

    // oracle: high-resolution quadrature of lambda^k times the standard
    // normal density
    auto phi = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); };
    double m2 = oracle::simpson([&](double x) { return x * x * phi(x); }, -12, 12);
    double m4 = oracle::simpson([&](double x) { return x * x * x * x * phi(x); }, -12, 12);
    CHECK(spectral_moment(m, mi({2})) == doctest::Approx(m2).epsilon(1e-10));
    CHECK(spectral_moment(m, mi({4})) == doctest::Approx(m4).epsilon(1e-10));
    CHECK(spectral_moment(m, mi({2})) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(spectral_moment(m, mi({4})) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("odd spectral moments vanish across families and indexes") {
    std::vector<SpectralModel> models = {
        SpectralModel::gaussian_iso(2, 1.0),
        SpectralModel::gaussian_aniso((Eigen::VectorXd(2) << 0.7, 1.9).finished(), 2.5),
        SpectralModel::bump(1, 2.0, 1.0),
    };
    for (const SpectralModel& m : models) {
        for (const Eigen::VectorXi& a : {mi({1}), mi({3}), mi({1, 0}), mi({1, 2}), mi({3, 1})}) {
            if (a.size() != m.dim) continue;
            CHECK(std::abs(spectral_moment(m, a)) < 1e-12);
        }
    }
}

TEST_CASE("bump moments agree with direct quadrature") {
    SpectralModel m = SpectralModel::bump(1, 2.0, 1.5);
    double mass = oracle::simpson([&](double x) { return m.density(Eigen::VectorXd::Constant(1, x)); },
                                  -2.0, 2.0);
    CHECK(mass == doctest::Approx(1.5).epsilon(1e-8));
    double m2 = oracle::simpson(
        [&](double x) { return x * x * m.density(Eigen::VectorXd::Constant(1, x)); }, -2.0, 2.0);
    CHECK(spectral_moment(m, mi({2})) == doctest::Approx(m2).epsilon(1e-8));
}

TEST_CASE("covariance structure entries for the d=1 unit gaussian") {
    CovarianceStructure cs = covariance_structure(SpectralModel::gaussian_iso(1, 1.0));
    REQUIRE(cs.D() == 3);
    CHECK(cs.xi(0, 0) == doctest::Approx(1.0)); // Var X'
    // (X'', X) block [[3, -1], [-1, 1]]
    CHECK(cs.xi(1, 1) == doctest::Approx(3.0));
    CHECK(cs.xi(1, 2) == doctest::Approx(-1.0));
    CHECK(cs.xi(2, 1) == doctest::Approx(-1.0));
    CHECK(cs.xi(2, 2) == doctest::Approx(1.0));
    // cross block exactly zero
    CHECK(cs.xi(0, 1) == 0.0);
    CHECK(cs.xi(0, 2) == 0.0);
}

TEST_CASE("anisotropic gradient covariance is diagonal with per-axis moments") {
    SpectralModel m = SpectralModel::gaussian_aniso((Eigen::VectorXd(2) << 1.0, 2.0).finished());
    CovarianceStructure cs = covariance_structure(m);
    // oracle: per-axis quadrature of lambda^2 against the axis marginal
    auto marginal = [&](double x, double s) {
        return std::exp(-0.5 * x * x / (s * s)) / (s * std::sqrt(2.0 * M_PI));
    };
    double v0 = oracle::simpson([&](double x) { return x * x * marginal(x, 1.0); }, -14, 14);
    double v1 = oracle::simpson([&](double x) { return x * x * marginal(x, 2.0); }, -30, 30);
    CHECK(cs.grad_cov()(0, 0) == doctest::Approx(v0).epsilon(1e-9));
    CHECK(cs.grad_cov()(1, 1) == doctest::Approx(v1).epsilon(1e-9));
    CHECK(cs.grad_cov()(0, 1) == 0.0);
}

TEST_CASE("block factor reconstructs Xi on all shipped fixtures") {
    std::vector<SpectralModel> models = {
        SpectralModel::gaussian_iso(1, 1.0),
        SpectralModel::gaussian_iso(2, 1.0),
        SpectralModel::gaussian_iso(3, 0.7),
        SpectralModel::gaussian_aniso((Eigen::VectorXd(2) << 1.0, 2.0).finished()),
        SpectralModel::bump(1, 2.0, 1.0),
    };
    for (const SpectralModel& m : models) {
        CovarianceStructure cs = covariance_structure(m);
        double err = (cs.lambda * cs.lambda.transpose() - cs.xi).cwiseAbs().maxCoeff();
        CHECK(err <= 1e-10);
    }
}

TEST_CASE("covariance derivatives at zero lag, d=1 gaussian") {
    SpectralModel m = SpectralModel::gaussian_iso(1, 1.0);
    CovarianceAtLag c = covariance_at(m, Eigen::VectorXd::Zero(1));
    CHECK(c.r0 == doctest::Approx(1.0));
    CHECK(c.r2(0, 0) == doctest::Approx(-1.0));
    CHECK(c.r4(0, 0, 0, 0) == doctest::Approx(3.0));
    CHECK(c.psi == doctest::Approx(3.0));
}

TEST_CASE("analytic derivatives match finite differences of the Fourier integral") {
    SpectralModel m = SpectralModel::gaussian_iso(1, 1.0);
    // oracle: r(t) by direct quadrature of cos(lambda t) f(lambda), then
    // central differences
    auto r_num = [&](double t) {
        return oracle::simpson(
            [&](double lam) {
                return std::cos(lam * t) * m.density(Eigen::VectorXd::Constant(1, lam));
            },
            -12, 12);
    };
    for (double t : {0.4, 1.3}) {
        CovarianceAtLag c = covariance_at(m, Eigen::VectorXd::Constant(1, t));
        double h = 1e-4;
        double r2_fd = (r_num(t + h) - 2 * r_num(t) + r_num(t - h)) / (h * h);
        CHECK(c.r2(0, 0) == doctest::Approx(r2_fd).epsilon(1e-5));
        double r1_fd = (r_num(t + h) - r_num(t - h)) / (2 * h);
        CHECK(c.r1[0] == doctest::Approx(r1_fd).epsilon(1e-6));
    }
}

TEST_CASE("bump covariance derivatives agree with the gaussian-style oracle") {
    SpectralModel m = SpectralModel::bump(1, 2.0, 1.0);
    auto r_num = [&](double t) {
        return oracle::simpson(
            [&](double lam) {
                return std::cos(lam * t) * m.density(Eigen::VectorXd::Constant(1, lam));
            },
            -2, 2);
    };
    CovarianceAtLag c = covariance_at(m, Eigen::VectorXd::Constant(1, 0.7));
    CHECK(c.r0 == doctest::Approx(r_num(0.7)).epsilon(1e-7));
    double h = 1e-4;
    double r2_fd = (r_num(0.7 + h) - 2 * r_num(0.7) + r_num(0.7 - h)) / (h * h);
    CHECK(c.r2(0, 0) == doctest::Approx(r2_fd).epsilon(1e-4));
}

TEST_CASE("Psi is even and far lags are negligible") {
    SpectralModel m = SpectralModel::gaussian_iso(2, 1.0);
    for (int i = 0; i < 8; ++i) {
        Eigen::VectorXd t(2);
        t << std::cos(0.7 * i) * (0.3 + 0.4 * i), std::sin(1.1 * i) * (0.2 + 0.3 * i);
        CHECK(covariance_at(m, t).psi ==
              doctest::Approx(covariance_at(m, Eigen::VectorXd(-t)).psi).epsilon(1e-12));
    }
    Eigen::VectorXd far(2);
    far << 8.0, 0.5;
    CHECK(covariance_at(m, far).psi < 1e-6);
}

TEST_CASE("lag-zero second derivative equals minus the second spectral moment") {
    std::vector<SpectralModel> models = {
        SpectralModel::gaussian_iso(2, 1.0),
        SpectralModel::gaussian_aniso((Eigen::VectorXd(2) << 0.8, 1.7).finished(), 1.3),
        SpectralModel::bump(1, 2.0, 1.0),
    };
    for (const SpectralModel& m : models) {
        CovarianceAtLag c = covariance_at(m, Eigen::VectorXd::Zero(m.dim));
        for (int i = 0; i < m.dim; ++i)
            for (int j = 0; j < m.dim; ++j) {
                Eigen::VectorXi a = Eigen::VectorXi::Zero(m.dim);
                a[i]++;
                a[j]++;
                CHECK(std::abs(c.r2(i, j) + spectral_moment(m, a)) < 1e-9);
            }
    }
}

TEST_CASE("assumption checks: healthy and diagnostic fixtures") {
    AssumptionReport good = check_assumptions(SpectralModel::gaussian_iso(2, 1.0));
    CHECK(good.a1.pass);
    CHECK(good.a3.pass);
    CHECK(good.a4.pass);
    CHECK(good.a5.pass);
    CHECK(good.a6.pass);
    CHECK(good.a2_implied());

    // bump pair away from the origin: f(0) = 0
    AssumptionReport shifted = check_assumptions(SpectralModel::bump(1, 2.0, 1.0, 3.0));
    CHECK_FALSE(shifted.a4.pass);
    CHECK(shifted.a1.pass);

    // zero axis scale: Var X' singular
    AssumptionReport degenerate = check_assumptions(
        SpectralModel::gaussian_aniso((Eigen::VectorXd(2) << 1.0, 0.0).finished()));
    CHECK_FALSE(degenerate.a1.pass);
}

TEST_CASE("degenerate model raises a block-named error from the factorization") {
    SpectralModel m = SpectralModel::gaussian_aniso((Eigen::VectorXd(2) << 1.0, 0.0).finished());
    CHECK_THROWS_AS(covariance_structure(m), DegenerateModelError);
    try {
        covariance_structure(m);
    } catch (const DegenerateModelError& e) {
        CHECK(e.block() == "Var(X')");
    }
}

TEST_CASE("model JSON round-trip is bit-exact") {
    std::vector<SpectralModel> models = {
        SpectralModel::gaussian_iso(2, 0.123456789012345678),
        SpectralModel::gaussian_aniso((Eigen::VectorXd(3) << 0.1, 1.0 / 3.0, M_PI).finished(),
                                      std::nextafter(1.0, 2.0)),
        SpectralModel::bump(1, 2.0000000001, 0.9999999999999999, 3.1),
    };
    for (const SpectralModel& m : models) {
        std::string text = to_json(m).dump();
        SpectralModel back = model_from_json(nlohmann::json::parse(text));
        CHECK(back.dim == m.dim);
        CHECK(back.family == m.family);
        CHECK(back.total_mass == m.total_mass); // exact, not approximate
        CHECK(back.radius == m.radius);
        CHECK(back.center == m.center);
        if (m.family == SpectralFamily::gaussian_anisotropic)
            CHECK((back.axis_scales.array() == m.axis_scales.array()).all());
        CHECK(to_json(back).dump() == text);
    }
}

TEST_CASE("correlation length of the unit gaussian is 1") {
    CHECK(correlation_length(SpectralModel::gaussian_iso(1, 1.0)) == doctest::Approx(1.0));
    CHECK(correlation_length(SpectralModel::gaussian_aniso(
              (Eigen::VectorXd(2) << 1.0, 2.0).finished())) == doctest::Approx(0.5));
}
