#include "cbc/certificates.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "cbc/error.hpp"

namespace cbc {

namespace {

std::vector<double> geometric_grid(int lo_exp, int hi_exp, int per_octave) {
  std::vector<double> g{0.0};
  for (int k = lo_exp * per_octave; k <= hi_exp * per_octave; ++k)
    g.push_back(std::exp2(static_cast<double>(k) / per_octave));
  return g;
}

}  // namespace

LyapunovCertificate build_lyapunov(const BranchingMechanism& mech, const CompetitionFunction& g,
                                   double alpha, const GrowthFunction& varphi, const LyapunovOptions& opts) {
  LyapunovCertificate cert;
  cert.hypotheses = qsd_hypotheses_check(mech, g, varphi, alpha);
  if (!cert.hypotheses.satisfied())
    throw DomainError(fmt::format("build_lyapunov: hypotheses not satisfied ({})",
                                  verdict_name(cert.hypotheses.verdict)));
  const LyapunovProfile g0(varphi, alpha);
  cert.W = TestFunction::lyapunov(g0);
  cert.alpha = alpha;
  cert.C0 = cert.W.sup();
  cert.steps_per_octave = opts.steps_per_octave;
  cert.grid = geometric_grid(opts.lo_exp, opts.hi_exp, opts.steps_per_octave);
  cert.LW.reserve(cert.grid.size());
  for (double x : cert.grid) cert.LW.push_back(apply_L(mech, g, cert.W, x));

  const auto h = [&](double x) { return g(x) / g0(x); };
  const std::size_t n = cert.grid.size();
  std::vector<double> hv(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) hv[i] = h(cert.grid[i]);

  // Smallest l = 2^k such that, on grid points beyond l, LW <= -h/2 and h is
  // non-decreasing. Scan from the right for the last failing index.
  std::size_t first_ok = n;
  for (std::size_t i = n; i-- > 1;) {
    const bool ok = cert.LW[i] <= -0.5 * hv[i] && (i + 1 == n || hv[i + 1] >= hv[i]);
    if (!ok) break;
    first_ok = i;
  }
  double l = 0.0;
  for (int k = 0; k <= 20; ++k) {
    const double cand = std::exp2(k);
    if (first_ok < n && cand >= cert.grid[first_ok]) {
      l = cand;
      break;
    }
  }
  if (l == 0.0) {
    std::string trace;
    for (std::size_t i = 1; i < n; i += opts.steps_per_octave)
      trace += fmt::format(" x={:.4g}: LW={:.4g} -h/2={:.4g};", cert.grid[i], cert.LW[i], -0.5 * hv[i]);
    throw NumericFailure("build_lyapunov: no l <= 2^20 found; trace:" + trace);
  }
  cert.l = l;

  // sup |LW| over K_n on a grid twice as fine as the verification grid.
  const double K_max = l + opts.rows - 1;
  const int fine = 4 * opts.steps_per_octave;
  std::vector<double> fx = geometric_grid(opts.lo_exp, static_cast<int>(std::ceil(std::log2(K_max))), fine);
  std::vector<double> fLW;
  fLW.reserve(fx.size());
  for (double x : fx) fLW.push_back(std::abs(apply_L(mech, g, cert.W, x)));

  for (int row = 1; row <= opts.rows; ++row) {
    LyapunovRow r;
    r.n = row;
    r.K_n = l + row - 1;
    double hstar = h(r.K_n);
    for (std::size_t i = 1; i < n; ++i)
      if (cert.grid[i] >= r.K_n) hstar = std::min(hstar, hv[i]);
    r.r_n = hstar / (2.0 * cert.C0);
    double sup = std::abs(apply_L(mech, g, cert.W, r.K_n));
    for (std::size_t i = 0; i < fx.size() && fx[i] <= r.K_n; ++i) sup = std::max(sup, fLW[i]);
    r.b_n = cert.C0 * r.r_n + sup;
    r.margin = kInf;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = cert.grid[i];
      const double rhs = r.r_n * cert.W.value(x) - (x <= r.K_n ? r.b_n : 0.0);
      const double m = -cert.LW[i] - rhs;
      if (m < r.margin) {
        r.margin = m;
        r.worst_x = x;
      }
    }
    cert.rows.push_back(r);
  }
  for (std::size_t i = 1; i < cert.rows.size(); ++i)
    if (!(cert.rows[i].r_n >= cert.rows[i - 1].r_n))
      throw InvariantBreach("build_lyapunov: r_n is not non-decreasing");
  return cert;
}

LyapunovReport verify_lyapunov(const LyapunovCertificate& cert, const BranchingMechanism& mech,
                               const CompetitionFunction& g, int n_max) {
  if (n_max < 1) throw DomainError("verify_lyapunov: n_max >= 1 required");
  LyapunovReport rep;
  const int per = 2 * cert.steps_per_octave;
  double lo = cert.grid.size() > 1 ? cert.grid[1] : 1.0;
  const std::vector<double> grid = geometric_grid(static_cast<int>(std::lround(std::log2(lo))),
                                                  static_cast<int>(std::lround(std::log2(cert.grid.back()))), per);
  std::vector<double> LW, W;
  for (double x : grid) {
    LW.push_back(apply_L(mech, g, cert.W, x));
    W.push_back(cert.W.value(x));
  }
  const int rows = std::min<int>(n_max, static_cast<int>(cert.rows.size()));
  double worst = kInf;
  for (int k = 0; k < rows; ++k) {
    LyapunovRow r = cert.rows[k];
    r.margin = kInf;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double x = grid[i];
      const double rhs = r.r_n * W[i] - (x <= r.K_n ? r.b_n : 0.0);
      const double m = -LW[i] - rhs;
      rep.points.push_back({r.n, x, -LW[i], rhs, m});
      if (m < r.margin) {
        r.margin = m;
        r.worst_x = x;
      }
    }
    if (r.margin < worst) {
      worst = r.margin;
      rep.offending_n = r.n;
      rep.offending_x = r.worst_x;
    }
    rep.rows.push_back(r);
  }
  rep.ok = worst >= 0.0;
  return rep;
}

NonExplosionCertificate verify_nonexplosion(const BranchingMechanism& mech, const CompetitionFunction& g,
                                            const TestFunction& V, double x_max) {
  if (!V.unbounded()) throw DomainError("verify_nonexplosion: V must tend to infinity");
  if (!(x_max > 1.0)) throw DomainError("verify_nonexplosion: x_max > 1 required");
  constexpr double kEps = 1e-9;
  NonExplosionCertificate cert;
  for (int k = -80;; ++k) {
    const double x = std::exp2(k / 4.0);
    if (x > x_max) break;
    cert.grid.push_back(x);
    cert.LV.push_back(apply_L(mech, g, V, x));
    cert.V.push_back(V.value(x));
  }
  std::vector<double> ratios;
  double C2 = kEps;
  for (std::size_t i = 0; i < cert.grid.size(); ++i) {
    if (cert.grid[i] < 1.0) continue;
    const double r = cert.LV[i] / cert.V[i];
    ratios.push_back(r);
    C2 = std::max(C2, r);
  }
  if (divergence_verdict(ratios, 1e3, 8) == Verdict::Satisfied) {
    cert.ok = false;
    cert.diagnostic = fmt::format("LV/V grows without bound along the grid (last ratio {:.4g} at x={:.4g})",
                                  ratios.back(), cert.grid.back());
    return cert;
  }
  double C1 = kEps;
  for (std::size_t i = 0; i < cert.grid.size(); ++i) C1 = std::max(C1, cert.LV[i] - C2 * cert.V[i]);
  cert.C1 = C1;
  cert.C2 = C2;
  cert.min_margin = kInf;
  for (std::size_t i = 0; i < cert.grid.size(); ++i)
    cert.min_margin = std::min(cert.min_margin, C1 + C2 * cert.V[i] - cert.LV[i]);
  cert.ok = std::isfinite(C1) && std::isfinite(C2);
  if (!cert.ok) cert.diagnostic = "non-finite constants";
  return cert;
}

}  // namespace cbc
