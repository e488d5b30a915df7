#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mmv/classic_solvers.hpp"
#include "mmv/mat.hpp"
#include "mmv/neural.hpp"
#include "mmv/rng.hpp"

namespace mmv {

/// One synthetic downlink scene: true channel, angular-domain channel with a
/// joint column support, unitary DFT bases, power-normalized pilots and the
/// scaled noise realization.
struct ChannelScene {
  CMat h;          // N_rx x M_tx
  CMat h_angular;  // N_rx x M_tx, sparse columns
  CMat a_r;        // N_rx x N_rx unitary
  CMat a_t;        // M_tx x M_tx unitary
  CMat s;          // M_tx x T pilots, tr(S^H S) = P*T
  CMat noise;      // N_rx x T
  CMat y;          // N_rx x T received, Y = H S + noise
  std::vector<int> support;  // transmit-angle bins, size == sparsity
  double noise_sigma = 0.0;  // per complex entry
  double snr_db = 0.0;
  double power_db = 0.0;
  int sparsity = 0;
  bool noiseless = false;
};

/// The CS-form triple: Ybar = Abar * Xbar + Nbar.
struct CsForm {
  CMat y_bar;  // T x N_rx
  CMat a_bar;  // T x M_tx
  CMat x_bar;  // M_tx x N_rx
  CMat n_bar;  // T x N_rx
};

struct SceneOptions {
  bool noiseless = false;
  /// Plant a random support size drawn uniformly from 1..sparsity instead of
  /// exactly sparsity.
  bool heavy_tail_sparsity = false;
  /// Reuse a fixed pilot matrix instead of drawing one from rng (the pilot
  /// is a designed sequence, shared across Monte-Carlo trials).
  std::optional<CMat> pilot;
};

ChannelScene generate_scene(int m_tx, int n_rx, int t_pilots, int sparsity, double snr_db,
                            double power_db, RngState& rng, const SceneOptions& opt = {});

/// Standard-normal complex pilot scaled to tr(S^H S) = P*T.
CMat make_pilot(int m_tx, int t_pilots, double power_db, RngState& rng);

CsForm to_cs_form(const ChannelScene& scene);

/// ||h_hat - h_true||_F / ||h_true||_F.
double nmse(const CMat& h_hat, const CMat& h_true);

/// Real-stacked MMV problem for the scene's CS form; target sparsity is
/// doubled because each complex atom occupies a (Re, Im) row pair.
MmvProblem scene_problem(const CsForm& cs, int sparsity);

/// Map a real-stacked estimate of Xbar back to the channel estimate
/// H_hat = A_R * Xbar_hat^H * A_T^H.
CMat estimate_from_xbar(const ChannelScene& scene, const Mat& x_hat_real);

/// A solver over the real-stacked MMV problem of a scene.
using SceneSolver = std::function<RecoveryResult(const MmvProblem&)>;

struct ChannelEstimate {
  CMat h_hat;
  double nmse = 0.0;
  int iterations = 0;
};

ChannelEstimate estimate_channel(const ChannelScene& scene, const SceneSolver& solver);

}  // namespace mmv
