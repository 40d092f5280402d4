#include "rotbec/sphere_flow.hpp"

#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <numbers>

#include "rotbec/errors.hpp"

namespace rotbec {

namespace {

using Columns = std::vector<Field>;

double re_inner(const Columns& a, const Columns& b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) s += inner(a[c], b[c]).real();
  return s;
}

void axpy(Columns& y, double s, const Columns& x) {
  for (std::size_t c = 0; c < y.size(); ++c) y[c].axpy(s, x[c]);
}

void scale(Columns& y, double s) {
  for (auto& f : y) f *= s;
}

std::vector<double> block_density(const Columns& cols) {
  std::vector<double> rho(cols[0].size(), 0.0);
  for (const auto& f : cols) {
    const auto v = f.values();
    for (std::size_t i = 0; i < rho.size(); ++i) rho[i] += std::norm(v[i]);
  }
  return rho;
}

void apply_h0(Hamiltonian& h, const Columns& in, Columns& out) {
  for (std::size_t c = 0; c < in.size(); ++c) h.apply(in[c].values(), out[c].values());
}

// Expansion coefficients of E(cos t psi + sin t d) - E(psi) for unit tangent d.
struct LineModel {
  double a, b, c;                     // <psi|H|psi>, Re<d|H|psi>, <d|H|d>
  double pp, qq, ss, pq, ps, qs;      // quartic integrals
  double coupling;                    // 4 pi g

  double delta(double t) const {
    const double cs = std::cos(t), sn = std::sin(t);
    const double s2 = sn * sn, c2 = cs * cs;
    const double lin = -s2 * a + 2.0 * cs * sn * b + s2 * c;
    const double quart = -s2 * (1.0 + c2) * pp + 4.0 * c2 * s2 * qq + s2 * s2 * ss +
                         4.0 * c2 * cs * sn * pq + 2.0 * c2 * s2 * ps + 4.0 * cs * s2 * sn * qs;
    return lin + coupling * quart;
  }
  double slope() const { return 2.0 * b + 4.0 * coupling * pq; }
  double curvature() const {
    return 2.0 * (c - a) + 2.0 * coupling * (-2.0 * pp + 4.0 * qq + 2.0 * ps);
  }
};

// Smallest-energy step along the geodesic; returns 0 when no decrease found.
double line_search(const LineModel& m, double& decrease) {
  const double slope = m.slope();
  decrease = 0.0;
  if (!(slope < 0.0)) return 0.0;
  const double curv = m.curvature();
  double hi = curv > 0.0 ? std::min(std::numbers::pi / 2, 4.0 * (-slope / curv))
                         : std::numbers::pi / 2;
  auto f = [&](double t) { return m.delta(t); };
  auto [t, ft] = boost::math::tools::brent_find_minima(f, 0.0, hi, 50);
  if (ft < 0.0) {
    decrease = ft;
    return t;
  }
  // Rounding-level landscape: back off from the Newton step.
  double step = curv > 0.0 ? -slope / curv : 1e-3;
  for (int k = 0; k < 60; ++k, step *= 0.5) {
    const double d = m.delta(step);
    if (d < 0.0) {
      decrease = d;
      return step;
    }
  }
  return 0.0;
}

}  // namespace

double block_energy(const ModelSpec& spec, const std::vector<Field>& columns) {
  Hamiltonian h(spec);
  double e = 0.0;
  for (const auto& f : columns) e += inner(f, h.apply(f)).real();
  const auto rho = block_density(columns);
  double q = 0.0;
  for (double r : rho) q += r * r;
  return e + 4.0 * std::numbers::pi * spec.g() * q * spec.grid().cell_volume();
}

FlowResult sphere_flow(const ModelSpec& spec, std::vector<Field> initial,
                       const FlowOptions& opts) {
  const Grid& grid = spec.grid();
  const double dv = grid.cell_volume();
  const double coupling = 4.0 * std::numbers::pi * spec.g();
  const std::size_t n = grid.size();
  const std::size_t ncol = initial.size();
  if (ncol == 0) throw InvalidState("sphere_flow: empty block");

  Columns psi = std::move(initial);
  if (opts.constrain)
    for (auto& f : psi) opts.constrain(f);
  auto normalize = [&](Columns& cols) {
    double nrm = 0.0;
    for (const auto& f : cols) nrm += f.norm_squared();
    if (!(nrm > 0.0)) throw InvalidState("sphere_flow: zero initial state");
    scale(cols, 1.0 / std::sqrt(nrm));
  };
  normalize(psi);

  Hamiltonian ham(spec);
  Columns hpsi(ncol, Field(grid)), grad(ncol, Field(grid)), resid(ncol, Field(grid));
  Columns z(ncol, Field(grid)), dir(ncol, Field(grid)), hdir(ncol, Field(grid));
  Columns resid_prev(ncol, Field(grid));
  apply_h0(ham, psi, hpsi);

  FlowResult out;
  double zr_prev = 0.0;
  bool have_prev = false;
  bool fresh = true;
  int since_refresh = 0;
  int stalls = 0;
  double sigma = 1.0;

  for (std::size_t it = 0;; ++it) {
    const auto rho = block_density(psi);
    for (std::size_t c = 0; c < ncol; ++c) {
      auto g = grad[c].values();
      const auto hp = hpsi[c].values();
      const auto p = psi[c].values();
      for (std::size_t i = 0; i < n; ++i) g[i] = hp[i] + 2.0 * coupling * rho[i] * p[i];
    }
    const double mu = re_inner(psi, grad);
    double res2 = 0.0;
    for (std::size_t c = 0; c < ncol; ++c) {
      auto r = resid[c].values();
      const auto g = grad[c].values();
      const auto p = psi[c].values();
      for (std::size_t i = 0; i < n; ++i) r[i] = g[i] - mu * p[i];
      res2 += resid[c].norm_squared();
    }
    const double res = std::sqrt(res2);
    out.mu = mu;
    out.residual = res;
    out.iterations = it;

    if (res <= opts.tol || stalls >= 3) {
      if (fresh) {
        out.converged = res <= opts.tol;
        break;
      }
      apply_h0(ham, psi, hpsi);
      fresh = true;
      since_refresh = 0;
      continue;
    }
    if (it >= opts.max_iter) break;

    if (since_refresh == 0) sigma = std::max(1.0, mu);

    // Preconditioned residual, projected onto the tangent space.
    for (std::size_t c = 0; c < ncol; ++c) {
      z[c] = resid[c];
      apply_kinetic_preconditioner(grid, sigma, z[c].values());
      if (opts.constrain) opts.constrain(z[c]);
    }
    axpy(z, -re_inner(psi, z), psi);
    const double zr = re_inner(z, resid);

    bool conjugate = opts.conjugate && have_prev;
    if (conjugate) {
      const double beta = std::max(0.0, (zr - re_inner(z, resid_prev)) / zr_prev);
      for (std::size_t c = 0; c < ncol; ++c) {
        dir[c] *= beta;
        dir[c].axpy(-1.0, z[c]);
      }
      axpy(dir, -re_inner(psi, dir), psi);
      if (!(re_inner(dir, resid) < 0.0)) conjugate = false;
    }
    if (!conjugate) {
      for (std::size_t c = 0; c < ncol; ++c) dir[c] = -1.0 * z[c];
    }
    resid_prev = resid;
    zr_prev = zr;
    have_prev = true;

    double dnorm = 0.0;
    for (const auto& f : dir) dnorm += f.norm_squared();
    dnorm = std::sqrt(dnorm);
    if (!(dnorm > 0.0)) {
      ++stalls;
      continue;
    }
    Columns dhat = dir;
    scale(dhat, 1.0 / dnorm);
    apply_h0(ham, dhat, hdir);

    LineModel m{};
    m.coupling = coupling;
    m.a = re_inner(psi, hpsi);
    m.b = re_inner(dhat, hpsi);
    m.c = re_inner(dhat, hdir);
    {
      double pp = 0, qq = 0, ss = 0, pq = 0, ps = 0, qs = 0;
      for (std::size_t i = 0; i < n; ++i) {
        double q = 0.0, s = 0.0;
        for (std::size_t c = 0; c < ncol; ++c) {
          const cplx pv = psi[c][i], dv_ = dhat[c][i];
          q += (std::conj(pv) * dv_).real();
          s += std::norm(dv_);
        }
        const double p = rho[i];
        pp += p * p;
        qq += q * q;
        ss += s * s;
        pq += p * q;
        ps += p * s;
        qs += q * s;
      }
      m.pp = pp * dv;
      m.qq = qq * dv;
      m.ss = ss * dv;
      m.pq = pq * dv;
      m.ps = ps * dv;
      m.qs = qs * dv;
    }

    double decrease = 0.0;
    double t = line_search(m, decrease);
    if (t == 0.0 && conjugate) {
      // Fall back to the preconditioned steepest direction.
      have_prev = false;
      ++stalls;
      continue;
    }
    if (t == 0.0) {
      ++stalls;
      if (!fresh) {
        apply_h0(ham, psi, hpsi);
        fresh = true;
        since_refresh = 0;
      }
      continue;
    }
    if (decrease > 0.0) throw InvalidState("sphere_flow: accepted step raised the energy");
    stalls = 0;

    const double cs = std::cos(t), sn = std::sin(t);
    for (std::size_t c = 0; c < ncol; ++c) {
      // Transport the search direction along the geodesic first (uses old psi).
      dir[c] *= cs;
      dir[c].axpy(-sn * dnorm, psi[c]);
      psi[c] *= cs;
      psi[c].axpy(sn, dhat[c]);
      hpsi[c] *= cs;
      hpsi[c].axpy(sn, hdir[c]);
    }
    fresh = false;
    if (++since_refresh >= opts.refresh_every) {
      if (opts.constrain)
        for (auto& f : psi) opts.constrain(f);
      normalize(psi);
      apply_h0(ham, psi, hpsi);
      fresh = true;
      since_refresh = 0;
    }
  }

  out.columns = std::move(psi);
  out.energy = block_energy(spec, out.columns);
  return out;
}

}  // namespace rotbec
