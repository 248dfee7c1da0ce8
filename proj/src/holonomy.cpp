#include "loopphase/holonomy.hpp"

#include "loopphase/errors.hpp"
#include "loopphase/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace loopphase::holonomy {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double two_pi = 2.0 * pi;
constexpr cdouble I{0.0, 1.0};

atomcore::CouplingConfig loop_config(const Magnitudes& m) {
  return atomcore::CouplingConfig::with_loop_phase(m.omega12, m.omega23, m.omega13, pi / 2.0);
}

Matrix3c rotation(double theta) {
  Matrix3c r = Matrix3c::Zero();
  r(0, 0) = std::polar(1.0, theta);
  r(1, 1) = r(0, 0);
  r(2, 2) = 1.0;
  return r;
}

} // namespace

void Magnitudes::validate() const {
  auto ok = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!ok(omega12)) throw ValidationError("magnitudes.omega12", "must be finite and >= 0");
  if (!ok(omega23)) throw ValidationError("magnitudes.omega23", "must be finite and >= 0");
  if (!ok(omega13)) throw ValidationError("magnitudes.omega13", "must be finite and >= 0");
  if (norm2() == 0.0) throw ValidationError("magnitudes", "all Rabi frequencies are zero");
}

double SpectrumSurface::u(int i) const { return two_pi * i / resolution; }
double SpectrumSurface::v(int j) const { return two_pi * j / resolution; }

double circular_distance(double a, double b) { return std::abs(atomcore::wrap_pi(a - b)); }

SpectrumSurface spectrum_surface(const Magnitudes& mags, int resolution, unsigned jobs) {
  if (resolution < 16) throw ValidationError("resolution", "must be at least 16");
  mags.validate();
  SpectrumSurface s;
  s.resolution = resolution;
  s.magnitudes = mags;
  const auto n = static_cast<std::size_t>(resolution) * resolution;
  for (auto& sheet : s.sheets) sheet.assign(n, 0.0);

  parallel_for(n, jobs, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const int i = static_cast<int>(k % resolution);
      const int j = static_cast<int>(k / resolution);
      atomcore::CouplingConfig c{mags.omega12, mags.omega23, mags.omega13, s.u(i), 0.0, s.v(j)};
      const auto roots = atomcore::eigen_spectrum(c);
      for (int b = 0; b < 3; ++b) s.sheets[b][k] = roots[b];
    }
  });

  const double gap_floor = 1e-6 * std::sqrt(mags.norm2());
  for (int j = 0; j < resolution; ++j) {
    for (int i = 0; i < resolution; ++i) {
      const double a = s.at(1, i, j);
      const double b = s.at(1, (i + 1) % resolution, j);
      if (a == 0.0) s.middle_zero_set.push_back({s.u(i), s.v(j)});
      else if (a * b < 0.0)
        s.middle_zero_set.push_back({atomcore::wrap_2pi(s.u(i) + a / (a - b) * two_pi / resolution), s.v(j)});

      const double gap = std::min(s.at(1, i, j) - s.at(0, i, j), s.at(2, i, j) - s.at(1, i, j));
      if (gap <= gap_floor) s.degeneracy_points.push_back({s.u(i), s.v(j)});
    }
  }
  return s;
}

DarkManifold dark_manifold(int resolution) {
  if (resolution < 2) throw ValidationError("resolution", "must be at least 2");
  DarkManifold m;
  for (double offset : {pi / 2.0, 3.0 * pi / 2.0}) {
    ManifoldLoop loop;
    loop.offset = offset;
    for (int i = 0; i < resolution; ++i) {
      const double u = two_pi * i / resolution;
      loop.points.push_back({u, atomcore::wrap_2pi(u - offset)});
    }
    // Winding numbers from the unwrapped increments around the closed polyline.
    double du = 0.0, dv = 0.0;
    for (std::size_t k = 0; k < loop.points.size(); ++k) {
      const auto& a = loop.points[k];
      const auto& b = loop.points[(k + 1) % loop.points.size()];
      du += atomcore::wrap_pi(b.u - a.u);
      dv += atomcore::wrap_pi(b.v - a.v);
    }
    loop.winding_u = static_cast<int>(std::lround(du / two_pi));
    loop.winding_v = static_cast<int>(std::lround(dv / two_pi));
    m.loops.push_back(std::move(loop));
  }

  m.min_separation = pi;
  for (const auto& p : m.loops[0].points)
    for (const auto& q : m.loops[1].points)
      m.min_separation = std::min(m.min_separation, circular_distance(p.u - p.v, q.u - q.v));
  m.disjoint = m.min_separation > 0.0;
  return m;
}

double berry_phase_closed(const Magnitudes& mags) {
  mags.validate();
  return -two_pi * (mags.omega23 * mags.omega23 + mags.omega13 * mags.omega13) / mags.norm2();
}

Vector3c dark_state_on_path(const Magnitudes& mags, double theta) {
  mags.validate();
  return rotation(theta) * atomcore::dark_state(loop_config(mags));
}

Matrix3c hamiltonian_on_path(const Magnitudes& mags, double theta) {
  const Matrix3c r = rotation(theta);
  return r * atomcore::build_hamiltonian_reduced(loop_config(mags)) * r.adjoint();
}

double berry_phase_wilson(const StateProvider& states, int n_samples, bool reverse) {
  if (n_samples < 100) throw ValidationError("n_samples", "must be at least 100");
  const double sign = reverse ? -1.0 : 1.0;
  const Vector3c first = states(0.0);
  Vector3c prev = first;
  cdouble product = 1.0;
  for (int k = 1; k <= n_samples; ++k) {
    const Vector3c next = k == n_samples ? first : states(sign * two_pi * k / n_samples);
    const cdouble overlap = prev.dot(next); // conjugates prev
    product *= overlap / std::abs(overlap);
    prev = next;
  }
  return atomcore::wrap_pi(-std::arg(product));
}

double berry_phase_wilson(const Magnitudes& mags, int n_samples, bool reverse) {
  mags.validate();
  const Vector3c d0 = atomcore::dark_state(loop_config(mags));
  return berry_phase_wilson([&](double theta) -> Vector3c { return rotation(theta) * d0; },
                            n_samples, reverse);
}

double berry_connection(const Magnitudes& mags, double theta, double h) {
  const Vector3c d = dark_state_on_path(mags, theta);
  const Vector3c derivative =
      (dark_state_on_path(mags, theta + h) - dark_state_on_path(mags, theta - h)) / (2.0 * h);
  return (I * d.dot(derivative)).real();
}

BerryResult adiabatic_evolve(const Magnitudes& mags, const AdiabaticOptions& options) {
  mags.validate();
  if (!(std::isfinite(options.total_time) && options.total_time > 0.0))
    throw ValidationError("total_time", "must be positive");
  if (options.n_steps < 1) throw ValidationError("n_steps", "must be >= 1");

  const Vector3c d0 = atomcore::dark_state(loop_config(mags));
  const Matrix3c h0 = atomcore::build_hamiltonian_reduced(loop_config(mags));
  const double T = options.total_time;
  auto angle = [&](double t) {
    const double s = t / T;
    if (options.ramp == Ramp::sin_squared) {
      const double w = std::sin(0.5 * pi * s);
      return two_pi * w * w;
    }
    return two_pi * s;
  };
  auto hamiltonian = [&](double t) {
    const Matrix3c r = rotation(angle(t));
    return Matrix3c(r * h0 * r.adjoint());
  };

  BerryResult out;
  out.gamma_closed = berry_phase_closed(mags);
  out.loop_samples = options.wilson_samples;
  out.gamma_wilson = berry_phase_wilson(mags, options.wilson_samples);
  if (options.keep_norm_drift) out.norm_drift.reserve(static_cast<std::size_t>(options.n_steps));

  const double dt = T / static_cast<double>(options.n_steps);
  Vector3c psi = d0;
  double energy_prev = (psi.dot(h0 * psi)).real();
  double dynamical = 0.0;
  for (long s = 0; s < options.n_steps; ++s) {
    const double t = dt * static_cast<double>(s);
    const Matrix3c ha = hamiltonian(t);
    const Matrix3c hm = hamiltonian(t + 0.5 * dt);
    const Matrix3c hb = hamiltonian(t + dt);
    const Vector3c k1 = -I * (ha * psi);
    const Vector3c k2 = -I * (hm * (psi + 0.5 * dt * k1));
    const Vector3c k3 = -I * (hm * (psi + 0.5 * dt * k2));
    const Vector3c k4 = -I * (hb * (psi + dt * k3));
    psi += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double norm = psi.norm();
    const double drift = std::abs(norm - 1.0);
    out.max_norm_drift = std::max(out.max_norm_drift, drift);
    if (options.keep_norm_drift) out.norm_drift.push_back(drift);
    psi /= norm;
    const double energy = (psi.dot(hb * psi)).real();
    dynamical -= 0.5 * dt * (energy_prev + energy);
    energy_prev = energy;
  }

  const Vector3c target = rotation(angle(T)) * d0;
  const cdouble overlap = target.dot(psi);
  out.adiabatic_fidelity = std::min(1.0, std::norm(overlap));
  out.accumulated_phase = std::arg(overlap);
  out.dynamical_phase = dynamical;
  out.diabatic = out.adiabatic_fidelity < 0.99;
  return out;
}

} // namespace loopphase::holonomy
