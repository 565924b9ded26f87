#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "critpt/field.hpp"
#include "critpt/rng.hpp"
#include "critpt/stats.hpp"

#include <cmath>

using namespace critpt;

TEST_CASE("synthesis is deterministic in (model, M, seed)") {
    SpectralModel m = SpectralModel::gaussian_iso(2, 1.0);
    FieldRealization a = synthesize(m, 256, 42);
    FieldRealization b = synthesize(m, 256, 42);
    CHECK((a.freqs.array() == b.freqs.array()).all());
    CHECK((a.xi == b.xi).all());
    CHECK((a.eta == b.eta).all());
    FieldRealization c = synthesize(m, 256, 43);
    CHECK_FALSE((a.xi == c.xi).all());
}

TEST_CASE("evaluation is pure: repeated calls are bit-identical") {
    FieldRealization f = synthesize(SpectralModel::gaussian_iso(2, 1.0), 333, 7);
    Eigen::VectorXd t(2);
    t << 0.37, -1.42;
    FieldJet j1 = evaluate(f, t);
    FieldJet j2 = evaluate(f, t);
    CHECK(j1.value == j2.value);
    CHECK((j1.grad.array() == j2.grad.array()).all());
    CHECK((j1.hess.array() == j2.hess.array()).all());
}

TEST_CASE("gradient and Hessian match finite differences of the closed form") {
    for (int d : {1, 2, 3}) {
        FieldRealization f = synthesize(SpectralModel::gaussian_iso(d, 1.0), 200, 11 + d);
        Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(d, 0.3, 0.9);
        FieldJet jet = evaluate(f, t);
        double h = 1e-5;
        for (int i = 0; i < d; ++i) {
            Eigen::VectorXd tp = t, tm = t;
            tp[i] += h;
            tm[i] -= h;
            double fd = (value_at(f, tp) - value_at(f, tm)) / (2 * h);
            CHECK(std::abs(jet.grad[i] - fd) <= 1e-6);
            FieldJet jp = evaluate(f, tp), jm = evaluate(f, tm);
            for (int j = 0; j < d; ++j) {
                double fd2 = (jp.grad[j] - jm.grad[j]) / (2 * h);
                CHECK(std::abs(jet.hess(i, j) - fd2) <= 1e-4);
            }
        }
        CHECK((jet.hess - jet.hess.transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("shifting the domain equals absorbing phases into the gaussian pair") {
    FieldRealization f = synthesize(SpectralModel::gaussian_iso(2, 1.0), 150, 99);
    Rng rng(5);
    for (int rep = 0; rep < 5; ++rep) {
        Eigen::VectorXd s(2), t(2);
        s << rng.uniform(-3, 3), rng.uniform(-3, 3);
        t << rng.uniform(-3, 3), rng.uniform(-3, 3);
        FieldRealization g = f.shifted(s);
        CHECK(value_at(g, t) == doctest::Approx(value_at(f, t + s)).epsilon(1e-12));
    }
}

TEST_CASE("variance and covariance against the closed-form r over 500 seeds") {
    SpectralModel m = SpectralModel::gaussian_iso(1, 1.0);
    const int R = 500;
    RunningStat var0;
    std::vector<double> x0(R), x1(R);
    for (int r = 0; r < R; ++r) {
        FieldRealization f = synthesize(m, 4000, 1000 + r);
        x0[r] = value_at(f, Eigen::VectorXd::Zero(1));
        x1[r] = value_at(f, Eigen::VectorXd::Constant(1, 1.0));
        var0.add(x0[r] * x0[r]);
    }
    CHECK(std::abs(var0.mean() - 1.0) <= 3.0 * var0.stderr_of_mean());

    RunningStat cross;
    for (int r = 0; r < R; ++r) cross.add(x0[r] * x1[r]);
    double r1 = std::exp(-0.5); // closed-form r(1) for the gaussian family
    CHECK(std::abs(cross.mean() - r1) <= 3.0 * cross.stderr_of_mean());
}

TEST_CASE("joint second moments of (X', X'', X)(0) match Xi within 4 stderr") {
    SpectralModel m = SpectralModel::gaussian_iso(1, 1.0);
    CovarianceStructure cs = covariance_structure(m);
    const int R = 500, D = 3;
    std::vector<Eigen::Vector3d> samples(R);
    for (int r = 0; r < R; ++r) {
        FieldRealization f = synthesize(m, 2000, 77000 + r);
        FieldJet jet = evaluate(f, Eigen::VectorXd::Zero(1));
        samples[r] << jet.grad[0], jet.hess(0, 0), jet.value;
    }
    for (int i = 0; i < D; ++i)
        for (int j = i; j < D; ++j) {
            RunningStat prod;
            for (int r = 0; r < R; ++r) prod.add(samples[r][i] * samples[r][j]);
            CHECK(std::abs(prod.mean() - cs.xi(i, j)) <= 4.0 * prod.stderr_of_mean());
        }
}

TEST_CASE("bump frequencies live in the support and the sampler terminates") {
    SpectralModel m = SpectralModel::bump(2, 1.5, 1.0);
    FieldRealization f = synthesize(m, 400, 3);
    CHECK(f.freqs.rowwise().norm().maxCoeff() <= 1.5);
    SpectralModel shifted = SpectralModel::bump(1, 2.0, 1.0, 3.0);
    FieldRealization g = synthesize(shifted, 400, 4);
    CHECK(g.freqs.cwiseAbs().maxCoeff() <= 5.0);
    CHECK(g.freqs.cwiseAbs().minCoeff() >= 1.0);
}

TEST_CASE("amplitude encodes mass over M") {
    FieldRealization f = synthesize(SpectralModel::gaussian_iso(1, 2.0), 128, 5);
    CHECK(f.amplitude == doctest::Approx(std::sqrt(2.0 / 128.0)));
    CHECK(f.M() == 128);
    CHECK_THROWS(synthesize(SpectralModel::gaussian_iso(1, 1.0), 0, 5));
}
