#pragma once

#include <stdexcept>
#include <string>

namespace critpt {

// Quadrature failed to reach the requested tolerance; carries what it achieved.
class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, double achieved_tol)
        : std::runtime_error(what + " (achieved tolerance " + std::to_string(achieved_tol) + ")"),
          achieved_tol_(achieved_tol) {}
    double achieved_tolerance() const { return achieved_tol_; }

private:
    double achieved_tol_;
};

// A covariance block that must be invertible is numerically singular.
class DegenerateModelError : public std::runtime_error {
public:
    DegenerateModelError(const std::string& block, const std::string& detail)
        : std::runtime_error("degenerate model: block '" + block + "': " + detail),
          block_(block) {}
    const std::string& block() const { return block_; }

private:
    std::string block_;
};

class SamplerError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A Hessian eigenvalue fell inside the Morse non-degeneracy window.
class DegenerateHessianError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An outward derivative on a box face is indistinguishable from zero.
class BoundaryDegeneracyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The assembled Euler characteristic differs from 1: a critical point was
// missed or fabricated somewhere in the census.
class CensusIntegrityError : public std::runtime_error {
public:
    CensusIntegrityError(long chi, std::uint64_t seed)
        : std::runtime_error("census integrity: chi = " + std::to_string(chi) +
                             " != 1 (seed " + std::to_string(seed) + ")"),
          chi_(chi) {}
    long chi() const { return chi_; }

private:
    long chi_;
};

// Requested (q, d, ...) above a configured ceiling.
class CapabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ExperimentIntegrityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NonDegeneracyViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An inequality's hypothesis (e.g. Arcones' Psi <= 1) does not hold.
class InapplicableRegimeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace critpt
