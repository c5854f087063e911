#pragma once

// Helpers shared by the zoo model builders and the certificate routines.

#include "sdestab/modelzoo.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace sdestab::zoo {

double get(const Params& p, const std::string& key);

ScalarField field(std::string name, std::function<double(const Vec&)> v, std::function<Vec(const Vec&)> g,
                  std::function<Mat(const Vec&)> h, double alpha, double beta);
ScalarField quadratic_norm(std::string name, double rho, int d, double alpha, double beta);

// Largest interval [lo, hi] inside (ylo, yhi) around the argmax of fprime on
// which 1 + dt fprime >= 1/2, found on a logistic (bounded) or log (unbounded) grid.
std::pair<double, double> safe_interval(const std::function<double(double)>& fprime, double ylo, double yhi,
                                        double dt, double margin);

// Effective noise constants of the oscillator variants: additive g = sqrt(eta0),
// linear g = c y with eta1 = c^2 and Lipschitz constant |c|.
struct OscNoiseData {
    double eta0 = 0.0;
    double eta1 = 0.0;
    double lip = 0.0;
    bool linear = false;
};
OscNoiseData osc_data(const ZooEntry& e);

double vdp_vartheta(const Params& p, const OscNoiseData& nz, double rho);
ScalarField vdp_field(const Params& p, const OscNoiseData& nz, double rho);
std::function<double(const Vec&)> vdp_ubar(const Params& p, const OscNoiseData& nz, double rho);

ScalarField duffing_field(const Params& p, const OscNoiseData& nz, double rho);
std::function<double(const Vec&)> duffing_ubar(const Params& p, const OscNoiseData& nz, double rho);

double lorenz_vartheta(const Params& p);
Mat lorenz_A(const Params& p);

double double_well(double q);
ScalarField langevin_field(const Params& p, double rho);

ScalarField sir_linear(double coef, double delta);
ScalarField sir_quadratic(std::string name, double coef, double delta, double gamma);

struct BrusselatorNoise {
    double eta = 0.0;  // sup |<sigma, (1, 1)>|
    double L = 0.0;    // Lipschitz constant of sigma
};
BrusselatorNoise brusselator_noise(const Params& p);
ScalarField brusselator_field(double rho, double eta, double eps, double delta);

// (coefficient, exponent) terms of the derivative of the transformed drift, as a function of x.
std::vector<std::pair<double, double>> volatility_rate_terms(const Params& p);

}  // namespace sdestab::zoo
