#include "mmv/mimo_channel.hpp"

#include <cmath>
#include <stdexcept>

#include "mmv/numerics.hpp"

namespace mmv {

namespace {

CMat dft_unitary(int n) {
  CMat f(n, n);
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      const double phase = -2.0 * M_PI * static_cast<double>(j) * k / n;
      f.re(j, k) = s * std::cos(phase);
      f.im(j, k) = s * std::sin(phase);
    }
  return f;
}

}  // namespace

CMat make_pilot(int m_tx, int t_pilots, double power_db, RngState& rng) {
  CMat s = complex_gaussian(rng, m_tx, t_pilots);
  const double p = std::pow(10.0, power_db / 10.0);
  const double target = p * t_pilots;  // tr(S^H S)
  const double cur = frobenius_norm(s);
  if (cur == 0.0) throw std::runtime_error("make_pilot: degenerate pilot draw");
  return cscale(s, std::sqrt(target) / cur);
}

ChannelScene generate_scene(int m_tx, int n_rx, int t_pilots, int sparsity, double snr_db,
                            double power_db, RngState& rng, const SceneOptions& opt) {
  if (m_tx < 1 || n_rx < 1 || t_pilots < 1 || sparsity < 1 || sparsity > m_tx ||
      t_pilots > m_tx)
    throw std::invalid_argument("generate_scene: invalid dimensions");

  ChannelScene sc;
  sc.snr_db = snr_db;
  sc.power_db = power_db;
  sc.noiseless = opt.noiseless;
  sc.a_r = dft_unitary(n_rx);
  sc.a_t = dft_unitary(m_tx);

  int k = sparsity;
  if (opt.heavy_tail_sparsity)
    k = 1 + static_cast<int>(rng.next_u64() % static_cast<uint64_t>(sparsity));
  sc.sparsity = k;

  // One support of transmit-angle bins shared by every receive antenna
  // (every row of H^a, i.e. every column of (H^a)^H).
  std::vector<int> perm(m_tx);
  for (int i = 0; i < m_tx; ++i) perm[i] = i;
  for (int i = m_tx - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.next_u64() % static_cast<uint64_t>(i + 1));
    std::swap(perm[i], perm[j]);
  }
  sc.support.assign(perm.begin(), perm.begin() + k);
  std::sort(sc.support.begin(), sc.support.end());

  sc.h_angular = CMat(n_rx, m_tx);
  const double cs = std::sqrt(0.5);
  for (int col : sc.support)
    for (int i = 0; i < n_rx; ++i) {
      sc.h_angular.re(i, col) = cs * rng.normal();
      sc.h_angular.im(i, col) = cs * rng.normal();
    }

  sc.h = cmul(cmul(sc.a_r, sc.h_angular), hermitian(sc.a_t));
  sc.s = opt.pilot ? *opt.pilot : make_pilot(m_tx, t_pilots, power_db, rng);
  if (sc.s.rows() != m_tx || sc.s.cols() != t_pilots)
    throw std::invalid_argument("generate_scene: pilot shape mismatch");

  const CMat hs = cmul(sc.h, sc.s);
  sc.noise = CMat(n_rx, t_pilots);
  if (!opt.noiseless) {
    // Per-scene scaling: ||HS||_F^2 / E||noise||_F^2 hits the requested SNR.
    const double snr_lin = std::pow(10.0, snr_db / 10.0);
    const double hs2 = frobenius_norm(hs);
    const double sigma = std::sqrt(hs2 * hs2 / (snr_lin * n_rx * t_pilots));
    sc.noise_sigma = sigma;
    sc.noise = cscale(complex_gaussian(rng, n_rx, t_pilots), sigma);
  }
  sc.y = cadd(hs, sc.noise);
  return sc;
}

CsForm to_cs_form(const ChannelScene& scene) {
  CsForm cs;
  cs.y_bar = cmul(hermitian(scene.y), scene.a_r);
  cs.a_bar = cmul(hermitian(scene.s), scene.a_t);
  cs.x_bar = hermitian(scene.h_angular);
  cs.n_bar = cmul(hermitian(scene.noise), scene.a_r);
  return cs;
}

double nmse(const CMat& h_hat, const CMat& h_true) {
  if (h_hat.rows() != h_true.rows() || h_hat.cols() != h_true.cols())
    throw std::invalid_argument("nmse: shape mismatch");
  const double denom = frobenius_norm(h_true);
  if (denom == 0.0) throw std::invalid_argument("nmse: zero true channel");
  return frobenius_norm(csub(h_hat, h_true)) / denom;
}

MmvProblem scene_problem(const CsForm& cs, int sparsity) {
  MmvProblem p;
  p.a = complex_to_real_stacked(cs.a_bar);
  p.y = real_stack_cols(cs.y_bar);
  p.k = 2 * sparsity;  // each complex atom spans a (Re, Im) row pair
  return p;
}

CMat estimate_from_xbar(const ChannelScene& scene, const Mat& x_hat_real) {
  const CMat x_bar_hat = real_unstack_cols(x_hat_real);
  return cmul(cmul(scene.a_r, hermitian(x_bar_hat)), hermitian(scene.a_t));
}

ChannelEstimate estimate_channel(const ChannelScene& scene, const SceneSolver& solver) {
  const CsForm cs = to_cs_form(scene);
  const MmvProblem problem = scene_problem(cs, scene.sparsity);
  const RecoveryResult rec = solver(problem);
  ChannelEstimate est;
  est.h_hat = estimate_from_xbar(scene, rec.x_hat);
  est.nmse = nmse(est.h_hat, scene.h);
  est.iterations = rec.iterations;
  return est;
}

}  // namespace mmv
