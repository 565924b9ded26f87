#pragma once

#include "critpt/spectral_model.hpp"

#include <Eigen/Core>
#include <cstdint>

namespace critpt {

// One realization of the field as a finite random-wave superposition:
//
//   X(t) = amplitude * sum_j [ xi_j cos(lambda_j . t) + eta_j sin(lambda_j . t) ]
//
// with frequencies lambda_j ~ f / total_mass i.i.d. and (xi_j, eta_j)
// i.i.d. standard normal. Conditional on the frequencies the field is a
// stationary Gaussian trigonometric polynomial, so (X, X', X'') have exact
// closed forms everywhere and sample paths are real-analytic.
struct FieldRealization {
    SpectralModel model;
    Eigen::MatrixXd freqs; // M x d
    Eigen::ArrayXd xi, eta;
    double amplitude = 0;
    std::uint64_t seed = 0;

    int M() const { return static_cast<int>(freqs.rows()); }
    int dim() const { return model.dim; }

    // same field translated by s, realized by absorbing the phases
    // lambda_j . s into the gaussian pair
    FieldRealization shifted(const Eigen::VectorXd& s) const;
};

FieldRealization synthesize(const SpectralModel& model, int M, std::uint64_t seed);

struct FieldJet {
    double value = 0;
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess; // symmetric by construction
};

FieldJet evaluate(const FieldRealization& field, const Eigen::VectorXd& t);

double value_at(const FieldRealization& field, const Eigen::VectorXd& t);

// Scratch buffers for tight census loops; evaluate() above allocates.
class FieldEvaluator {
public:
    explicit FieldEvaluator(const FieldRealization& field);
    const FieldJet& jet(const Eigen::VectorXd& t);

private:
    const FieldRealization* field_;
    Eigen::ArrayXd phase_;
    FieldJet out_;
};

} // namespace critpt
