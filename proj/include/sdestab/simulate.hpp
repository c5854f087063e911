#pragma once

#include "sdestab/core.hpp"
#include "sdestab/operators.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sdestab {

// Stateless Gaussian increments keyed by (seed, path, fine step, lane).
class NoiseSource {
public:
    NoiseSource(std::uint64_t seed, std::uint64_t path_index) : seed_(seed), path_(path_index) {}

    double normal(std::uint64_t fine_step, std::uint64_t lane) const;
    // Increment over coarse step k of length dt, built from `substeps` fine
    // increments of length dt / substeps.
    Vec increment(std::uint64_t step, double dt, int m, int substeps) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t path_index() const { return path_; }

private:
    std::uint64_t seed_;
    std::uint64_t path_;
};

std::uint64_t mix64(std::uint64_t z);

struct Path {
    double dt = 0.0;
    std::vector<Vec> states;  // original coordinates, states[0] = x0
    std::vector<Vec> internal;  // scheme coordinates (transformed schemes only)
    std::optional<std::size_t> exit_step;  // first step whose state left the domain
};

struct PathPair {
    double dt = 0.0;
    Path x_path;
    Path y_path;
    std::vector<Vec> increments;  // increments[k] drives step k -> k+1
    bool shared_increments = true;
    std::optional<std::size_t> exit_step;  // min of the two exit steps
};

// Steps the scheme once. `state` is in scheme coordinates; returns false if the new state left the domain.
class Stepper {
public:
    Stepper(const SdeModel& model, Scheme scheme, double dt);

    Vec to_internal(const Vec& x) const;
    Vec to_original(const Vec& s) const;
    bool step(Vec& state, const Vec& dW) const;
    bool transformed() const { return scheme_ != Scheme::euler_maruyama; }

private:
    const SdeModel& model_;
    Scheme scheme_;
    double dt_;
    double lo_ = -kInf;
    double hi_ = kInf;
};

Path integrate(const SdeModel& model, const Vec& x0, double T, const McConfig& cfg, const NoiseSource& noise);
PathPair coupled_pair(const SdeModel& model, const Vec& x, const Vec& y, double T, const McConfig& cfg,
                      const NoiseSource& noise);

// Visits (k, t_k, original state) for k = 0..N or until exit. Returns the exit step if any.
std::optional<std::size_t> visit_path(const SdeModel& model, const Vec& x0, double T, const McConfig& cfg,
                                      const NoiseSource& noise,
                                      const std::function<void(std::size_t, double, const Vec&)>& visit);

enum class DistanceSpace { original, internal };

struct PairStats {
    double initial = 0.0;
    double final_dist = 0.0;  // at T or at the exit time
    double sup_dist = 0.0;    // over the time grid up to T or the exit time
    bool exited = false;
};

PairStats pair_stats(const SdeModel& model, const Vec& x, const Vec& y, double T, const McConfig& cfg,
                     const NoiseSource& noise, DistanceSpace space);

// n_paths coupled pairs with noise paths 0..n-1, run in parallel, results in path order.
std::vector<PairStats> run_pairs(const SdeModel& model, const Vec& x, const Vec& y, double T, const McConfig& cfg,
                                 DistanceSpace space);

// Worker count: cfg value (0 = hardware), capped by SDESTAB_THREADS.
int resolve_threads(int requested);
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

struct ResidualResult {
    double residual = 0.0;
    std::size_t steps_used = 0;
    bool truncated = false;
};

// |log V(X_N, Y_N) - log V(x, y) - sum (ratio_gen - ratio_noise_sq/2) dt - sum (G_sigma V / V) dW|
// with left-point evaluation; truncated at the first zero of V or domain exit.
ResidualResult pathwise_identity_residual(const SdeModel& model, const PairField& V, const PathPair& pair);

struct BlowupResult {
    double tau = kInf;
    bool blew_up = false;
    double final_norm = 0.0;
    std::vector<std::pair<double, double>> trace;  // (t, ||z||)
};

// Right-hand side z' = ||w||^2 R w with w = z - t R z / ||z||^{3/2}, R = [[0, 1], [-1, 0]].
Vec rotation_rhs(double t, const Vec& z);
// Adaptive RK4 with step halving; returns the first time ||z|| >= threshold.
BlowupResult rode_blowup(const Vec& x0, double dt, double threshold, double t_max = 10.0);

// Binary dump: int64 d, int64 N, float64 dt, uint64 seed, then N+1 rows of d float64 (little endian).
void write_path_dump(const Path& path, std::uint64_t seed, const std::string& filename);
Path read_path_dump(const std::string& filename, std::uint64_t* seed_out = nullptr);

}  // namespace sdestab
