#include "sdestab/simulate.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace sdestab {

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double NoiseSource::normal(std::uint64_t fine_step, std::uint64_t lane) const {
    std::uint64_t h = mix64(seed_ ^ mix64(path_ + 0x632BE59BD9B4E019ULL));
    h = mix64(h ^ (fine_step * 0xD6E8FEB86659FD93ULL));
    h = mix64(h ^ (lane * 0xA0761D6478BD642FULL));
    const std::uint64_t h2 = mix64(h ^ 0xE7037ED1A0B428DBULL);
    const double u1 = (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = static_cast<double>(h2 >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Vec NoiseSource::increment(std::uint64_t step, double dt, int m, int substeps) const {
    Vec dW = Vec::Zero(m);
    const double s = std::sqrt(dt / substeps);
    for (int i = 0; i < substeps; ++i) {
        const std::uint64_t fine = step * static_cast<std::uint64_t>(substeps) + static_cast<std::uint64_t>(i);
        for (int l = 0; l < m; ++l) dW(l) += s * normal(fine, static_cast<std::uint64_t>(l));
    }
    return dW;
}

Stepper::Stepper(const SdeModel& model, Scheme scheme, double dt) : model_(model), scheme_(scheme), dt_(dt) {
    if (scheme_ == Scheme::euler_maruyama) return;
    if (!model_.transform) throw std::invalid_argument("transformed scheme requested for a model without transform");
    const auto& tr = *model_.transform;
    if (tr.safe_range) {
        std::tie(lo_, hi_) = tr.safe_range(dt);
    } else {
        lo_ = tr.y_lower + model_.domain.margin;
        hi_ = tr.y_upper - model_.domain.margin;
    }
}

Vec Stepper::to_internal(const Vec& x) const {
    if (scheme_ == Scheme::euler_maruyama) return x;
    Vec s(1);
    s(0) = std::clamp(model_.transform->fwd(x(0)), lo_, hi_);
    return s;
}

Vec Stepper::to_original(const Vec& s) const {
    if (scheme_ == Scheme::euler_maruyama) return s;
    Vec x(1);
    x(0) = model_.transform->inv(s(0));
    return x;
}

bool Stepper::step(Vec& state, const Vec& dW) const {
    if (scheme_ == Scheme::euler_maruyama) {
        state += model_.drift(state) * dt_ + model_.diffusion(state) * dW;
        return model_.domain.contains(state);
    }
    const auto& tr = *model_.transform;
    double y = state(0);
    y += tr.drift(y) * dt_ + tr.diffusion * dW(0);
    if (scheme_ == Scheme::reflected_transformed) {
        if (y < lo_) y = 2.0 * lo_ - y;
        if (y > hi_) y = 2.0 * hi_ - y;
    }
    y = std::clamp(y, lo_, hi_);
    state(0) = y;
    return std::isfinite(y);
}

std::optional<std::size_t> visit_path(const SdeModel& model, const Vec& x0, double T, const McConfig& cfg,
                                      const NoiseSource& noise,
                                      const std::function<void(std::size_t, double, const Vec&)>& visit) {
    if (!model.domain.contains(x0)) throw std::invalid_argument("integrate: initial point outside the domain");
    const std::size_t N = cfg.steps_for(T);
    const Stepper st(model, cfg.scheme, cfg.dt);
    Vec s = st.to_internal(x0);
    visit(0, 0.0, st.to_original(s));
    for (std::size_t k = 0; k < N; ++k) {
        const Vec dW = noise.increment(k, cfg.dt, model.dim_noise, cfg.substeps);
        if (!st.step(s, dW)) return k + 1;
        visit(k + 1, static_cast<double>(k + 1) * cfg.dt, st.to_original(s));
    }
    return std::nullopt;
}

Path integrate(const SdeModel& model, const Vec& x0, double T, const McConfig& cfg, const NoiseSource& noise) {
    if (!model.domain.contains(x0)) throw std::invalid_argument("integrate: initial point outside the domain");
    const std::size_t N = cfg.steps_for(T);
    const Stepper st(model, cfg.scheme, cfg.dt);
    Path p;
    p.dt = cfg.dt;
    Vec s = st.to_internal(x0);
    p.states.reserve(N + 1);
    p.states.push_back(st.to_original(s));
    if (st.transformed()) p.internal.push_back(s);
    for (std::size_t k = 0; k < N; ++k) {
        const Vec dW = noise.increment(k, cfg.dt, model.dim_noise, cfg.substeps);
        if (!st.step(s, dW)) {
            p.exit_step = k + 1;
            break;
        }
        p.states.push_back(st.to_original(s));
        if (st.transformed()) p.internal.push_back(s);
    }
    return p;
}

PathPair coupled_pair(const SdeModel& model, const Vec& x, const Vec& y, double T, const McConfig& cfg,
                      const NoiseSource& noise) {
    if (!model.domain.contains(x) || !model.domain.contains(y)) {
        throw std::invalid_argument("coupled_pair: initial point outside the domain");
    }
    const std::size_t N = cfg.steps_for(T);
    const Stepper st(model, cfg.scheme, cfg.dt);
    PathPair pp;
    pp.dt = cfg.dt;
    pp.x_path.dt = pp.y_path.dt = cfg.dt;
    Vec sx = st.to_internal(x), sy = st.to_internal(y);
    auto record = [&]() {
        pp.x_path.states.push_back(st.to_original(sx));
        pp.y_path.states.push_back(st.to_original(sy));
        if (st.transformed()) {
            pp.x_path.internal.push_back(sx);
            pp.y_path.internal.push_back(sy);
        }
    };
    record();
    for (std::size_t k = 0; k < N; ++k) {
        const Vec dW = noise.increment(k, cfg.dt, model.dim_noise, cfg.substeps);
        const bool okx = st.step(sx, dW);
        const bool oky = st.step(sy, dW);
        if (!okx) pp.x_path.exit_step = k + 1;
        if (!oky) pp.y_path.exit_step = k + 1;
        if (!okx || !oky) {
            pp.exit_step = k + 1;
            break;
        }
        pp.increments.push_back(dW);
        record();
    }
    return pp;
}

PairStats pair_stats(const SdeModel& model, const Vec& x, const Vec& y, double T, const McConfig& cfg,
                     const NoiseSource& noise, DistanceSpace space) {
    if (!model.domain.contains(x) || !model.domain.contains(y)) {
        throw std::invalid_argument("pair_stats: initial point outside the domain");
    }
    const std::size_t N = cfg.steps_for(T);
    const Stepper st(model, cfg.scheme, cfg.dt);
    Vec sx = st.to_internal(x), sy = st.to_internal(y);
    auto dist = [&]() {
        if (space == DistanceSpace::internal) return (sx - sy).norm();
        return (st.to_original(sx) - st.to_original(sy)).norm();
    };
    PairStats ps;
    ps.initial = dist();
    ps.final_dist = ps.sup_dist = ps.initial;
    for (std::size_t k = 0; k < N; ++k) {
        const Vec dW = noise.increment(k, cfg.dt, model.dim_noise, cfg.substeps);
        Vec nx = sx, ny = sy;
        const bool okx = st.step(nx, dW);
        const bool oky = st.step(ny, dW);
        if (!okx || !oky) {
            ps.exited = true;
            break;
        }
        sx = std::move(nx);
        sy = std::move(ny);
        ps.final_dist = dist();
        ps.sup_dist = std::max(ps.sup_dist, ps.final_dist);
    }
    return ps;
}

int resolve_threads(int requested) {
    int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* env = std::getenv("SDESTAB_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) n = std::min(n, cap);
    }
    return n;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, threads)), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            try {
                // Strided assignment; every index writes only its own output slot.
                for (std::size_t i = w; i < n; i += workers) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::vector<PairStats> run_pairs(const SdeModel& model, const Vec& x, const Vec& y, double T, const McConfig& cfg,
                                 DistanceSpace space) {
    cfg.validate(false);
    std::vector<PairStats> out(cfg.n_paths);
    parallel_for(cfg.n_paths, resolve_threads(cfg.threads), [&](std::size_t i) {
        out[i] = pair_stats(model, x, y, T, cfg, NoiseSource(cfg.seed, i), space);
    });
    return out;
}

ResidualResult pathwise_identity_residual(const SdeModel& model, const PairField& V, const PathPair& pair) {
    const auto& xs = pair.x_path.states;
    const auto& ys = pair.y_path.states;
    if (xs.empty() || ys.empty()) throw std::invalid_argument("pathwise_identity_residual: empty pair");
    const double v0 = V.value(xs[0], ys[0]);
    if (!(v0 > 0.0)) throw std::invalid_argument("pathwise_identity_residual: V(x, y) must be > 0");
    ResidualResult res;
    double acc = 0.0;
    std::size_t k = 0;
    const std::size_t n = std::min(pair.increments.size(), std::min(xs.size(), ys.size()) - 1);
    for (; k < n; ++k) {
        const double vk = V.value(xs[k], ys[k]);
        if (!(vk > 1e-300)) {
            res.truncated = true;
            break;
        }
        const OperatorValues ov = apply_extended(model, V, xs[k], ys[k]);
        acc += (ov.ratio_gen - 0.5 * ov.ratio_noise_sq) * pair.dt + ov.extnoise_row.dot(pair.increments[k]) / vk;
    }
    if (pair.exit_step) res.truncated = true;
    const double vend = V.value(xs[k], ys[k]);
    if (!(vend > 0.0)) {
        // V reached zero exactly at the last step; report on the window before it.
        res.truncated = true;
        if (k == 0) return res;
        --k;
        acc = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const OperatorValues ov = apply_extended(model, V, xs[i], ys[i]);
            acc += (ov.ratio_gen - 0.5 * ov.ratio_noise_sq) * pair.dt +
                   ov.extnoise_row.dot(pair.increments[i]) / V.value(xs[i], ys[i]);
        }
    }
    res.steps_used = k;
    res.residual = std::abs(std::log(V.value(xs[k], ys[k])) - std::log(v0) - acc);
    return res;
}

Vec rotation_rhs(double t, const Vec& z) {
    const double n = z.norm();
    Vec Rz(2);
    Rz << z(1), -z(0);
    const Vec w = z - t * Rz / std::pow(n, 1.5);
    Vec Rw(2);
    Rw << w(1), -w(0);
    return w.squaredNorm() * Rw;
}

namespace {

// The norm of the rotation ODE obeys n' = t (n^{3/2} + t^2 n^{-3/2}) and the
// angle phi' = -(n^2 + t^2/n) exactly. In u = n^{-1/2} the radial equation is
// u' = -(t/2)(1 + t^2 u^6), which is smooth through the blow-up (u -> 0), so
// RK4 resolves tau without following the ever faster rotation.
struct PolarState {
    double u;
    double phi;
};

PolarState polar_rhs(double t, const PolarState& s) {
    const double u2 = s.u * s.u;
    const double n = 1.0 / u2;
    return {-0.5 * t * (1.0 + t * t * u2 * u2 * u2), -(n * n + t * t / n)};
}

PolarState rk4(double t, const PolarState& s, double h) {
    auto add = [](const PolarState& a, const PolarState& b, double c) {
        return PolarState{a.u + c * b.u, a.phi + c * b.phi};
    };
    const PolarState k1 = polar_rhs(t, s);
    const PolarState k2 = polar_rhs(t + h / 2, add(s, k1, h / 2));
    const PolarState k3 = polar_rhs(t + h / 2, add(s, k2, h / 2));
    const PolarState k4 = polar_rhs(t + h, add(s, k3, h));
    return {s.u + h / 6 * (k1.u + 2 * k2.u + 2 * k3.u + k4.u),
            s.phi + h / 6 * (k1.phi + 2 * k2.phi + 2 * k3.phi + k4.phi)};
}

}  // namespace

BlowupResult rode_blowup(const Vec& x0, double dt, double threshold, double t_max) {
    if (x0.size() != 2) throw std::invalid_argument("rode_blowup: x0 must be two-dimensional");
    if (!(x0.norm() > 0.0)) throw std::invalid_argument("rode_blowup: x0 must be nonzero");
    if (!(dt > 0.0) || !(threshold > x0.norm()))
        throw std::invalid_argument("rode_blowup: need dt > 0 and threshold > ||x0||");
    BlowupResult res;
    PolarState s{1.0 / std::sqrt(x0.norm()), std::atan2(x0(1), x0(0))};
    const double u_stop = 1.0 / std::sqrt(threshold);
    double t = 0.0, h = dt;
    const double tol = 1e-13;
    res.trace.emplace_back(0.0, x0.norm());
    while (t < t_max) {
        const double hh = std::min(h, t_max - t);
        const PolarState full = rk4(t, s, hh);
        const PolarState half = rk4(t + hh / 2, rk4(t, s, hh / 2), hh / 2);
        const double err = std::abs(half.u - full.u);
        if (!(err <= tol * std::max(std::abs(half.u), u_stop)) || !std::isfinite(half.u)) {
            h = hh / 2;
            if (h < 1e-18) break;
            continue;
        }
        if (half.u <= u_stop) {
            // Crossing inside this step: bisect on the step length.
            double a = 0.0, b = hh;
            for (int i = 0; i < 80; ++i) {
                const double m = 0.5 * (a + b);
                const PolarState sm = rk4(t + m / 2, rk4(t, s, m / 2), m / 2);
                (sm.u <= u_stop ? b : a) = m;
            }
            t += b;
            res.tau = t;
            res.blew_up = true;
            res.final_norm = threshold;
            res.trace.emplace_back(t, threshold);
            return res;
        }
        s = half;
        t += hh;
        res.trace.emplace_back(t, 1.0 / (s.u * s.u));
        if (err < tol * std::abs(s.u) / 64.0) h = std::min(2.0 * hh, dt);
        // Halve when the state approaches the threshold so the crossing is resolved.
        if (s.u < 4.0 * u_stop) h = std::min(h, dt / 16.0);
    }
    res.final_norm = 1.0 / (s.u * s.u);
    return res;
}

namespace {

template <typename T>
void put(std::ofstream& os, T v) {
    static_assert(std::endian::native == std::endian::little, "path dump assumes a little-endian host");
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("read_path_dump: truncated file");
    return v;
}

}  // namespace

void write_path_dump(const Path& path, std::uint64_t seed, const std::string& filename) {
    std::ofstream os(filename, std::ios::binary);
    if (!os) throw std::runtime_error("write_path_dump: cannot open " + filename);
    const std::int64_t d = path.states.empty() ? 0 : path.states.front().size();
    const std::int64_t N = static_cast<std::int64_t>(path.states.size()) - 1;
    put(os, d);
    put(os, N);
    put(os, path.dt);
    put(os, seed);
    for (const auto& s : path.states) {
        for (Eigen::Index i = 0; i < s.size(); ++i) put(os, s(i));
    }
}

Path read_path_dump(const std::string& filename, std::uint64_t* seed_out) {
    std::ifstream is(filename, std::ios::binary);
    if (!is) throw std::runtime_error("read_path_dump: cannot open " + filename);
    const auto d = get<std::int64_t>(is);
    const auto N = get<std::int64_t>(is);
    Path p;
    p.dt = get<double>(is);
    const auto seed = get<std::uint64_t>(is);
    if (seed_out) *seed_out = seed;
    for (std::int64_t k = 0; k <= N; ++k) {
        Vec s(d);
        for (std::int64_t i = 0; i < d; ++i) s(i) = get<double>(is);
        p.states.push_back(std::move(s));
    }
    return p;
}

}  // namespace sdestab
