#include "critpt/field.hpp"

#include "critpt/errors.hpp"
#include "critpt/rng.hpp"

#include <cmath>

namespace critpt {

namespace {

Eigen::VectorXd draw_frequency(const SpectralModel& model, Rng& rng) {
    const int d = model.dim;
    if (model.is_gaussian()) {
        Eigen::VectorXd s = model.scales();
        Eigen::VectorXd lam(d);
        for (int l = 0; l < d; ++l) lam[l] = s[l] * rng.normal();
        return lam;
    }
    // bump_compact: rejection from the uniform envelope over the support box
    double L = model.radius + std::abs(model.center);
    double fmax = model.density(Eigen::VectorXd::Zero(d));
    if (model.center != 0.0) {
        Eigen::VectorXd peak = Eigen::VectorXd::Zero(d);
        peak[0] = model.center;
        fmax = std::max(fmax, model.density(peak));
    }
    fmax *= 1.05;
    for (int attempt = 0; attempt < 100000; ++attempt) {
        Eigen::VectorXd lam(d);
        for (int l = 0; l < d; ++l) lam[l] = rng.uniform(-L, L);
        if (rng.uniform() * fmax <= model.density(lam)) return lam;
    }
    throw SamplerError("bump_compact frequency sampler exceeded the attempt budget");
}

} // namespace

FieldRealization synthesize(const SpectralModel& model, int M, std::uint64_t seed) {
    if (M < 1) throw std::invalid_argument("synthesize: M >= 1 required");
    FieldRealization f;
    f.model = model;
    f.seed = seed;
    f.amplitude = std::sqrt(model.total_mass / static_cast<double>(M));
    f.freqs.resize(M, model.dim);
    f.xi.resize(M);
    f.eta.resize(M);
    Rng rng(split_seed(seed, 0x66726571ULL)); // frequencies + amplitudes stream
    for (int j = 0; j < M; ++j) f.freqs.row(j) = draw_frequency(model, rng);
    for (int j = 0; j < M; ++j) {
        f.xi[j] = rng.normal();
        f.eta[j] = rng.normal();
    }
    return f;
}

FieldRealization FieldRealization::shifted(const Eigen::VectorXd& s) const {
    FieldRealization out = *this;
    Eigen::ArrayXd phase = (freqs * s).array();
    Eigen::ArrayXd c = phase.cos(), sn = phase.sin();
    out.xi = xi * c + eta * sn;
    out.eta = eta * c - xi * sn;
    return out;
}

FieldEvaluator::FieldEvaluator(const FieldRealization& field) : field_(&field) {
    phase_.resize(field.M());
    out_.grad.resize(field.dim());
    out_.hess.resize(field.dim(), field.dim());
}

const FieldJet& FieldEvaluator::jet(const Eigen::VectorXd& t) {
    const FieldRealization& f = *field_;
    const int d = f.dim();
    const int M = f.M();
    phase_.matrix().noalias() = f.freqs * t;

    // fused per-atom pass: sincos dominates, so one traversal with small
    // stack accumulators beats separate Eigen reductions
    double val = 0.0;
    double g[3] = {0, 0, 0};
    double h[6] = {0, 0, 0, 0, 0, 0};
    const double* xi = f.xi.data();
    const double* eta = f.eta.data();
    const double* ph = phase_.data();
    for (int j = 0; j < M; ++j) {
        double s, c;
        sincos(ph[j], &s, &c);
        double wc = xi[j] * c + eta[j] * s;
        double ws = eta[j] * c - xi[j] * s;
        val += wc;
        double lam[3];
        for (int i = 0; i < d; ++i) {
            lam[i] = f.freqs(j, i);
            g[i] += lam[i] * ws;
        }
        int p = 0;
        for (int a = 0; a < d; ++a)
            for (int b = a; b < d; ++b) h[p++] -= lam[a] * lam[b] * wc;
    }
    out_.value = f.amplitude * val;
    for (int i = 0; i < d; ++i) out_.grad[i] = f.amplitude * g[i];
    int p = 0;
    for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b) {
            out_.hess(a, b) = f.amplitude * h[p];
            out_.hess(b, a) = f.amplitude * h[p];
            ++p;
        }
    return out_;
}

FieldJet evaluate(const FieldRealization& field, const Eigen::VectorXd& t) {
    FieldEvaluator ev(field);
    return ev.jet(t);
}

double value_at(const FieldRealization& field, const Eigen::VectorXd& t) {
    Eigen::ArrayXd phase = (field.freqs * t).array();
    return field.amplitude * (field.xi * phase.cos() + field.eta * phase.sin()).sum();
}

} // namespace critpt
