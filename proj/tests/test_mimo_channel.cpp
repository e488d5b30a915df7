#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mmv/classic_solvers.hpp"
#include "mmv/mimo_channel.hpp"
#include "mmv/numerics.hpp"
#include "mmv/rng.hpp"

using namespace mmv;

namespace {

double cdiff(const CMat& a, const CMat& b) {
  return frobenius_norm(csub(a, b));
}

bool is_unitary(const CMat& u, double tol) {
  const CMat prod = cmul(hermitian(u), u);
  CMat eye(u.cols(), u.cols());
  eye.re = Mat::identity(u.cols());
  return cdiff(prod, eye) < tol;
}

}  // namespace

TEST_CASE("dft bases are unitary") {
  RngState rng(1);
  const ChannelScene s = generate_scene(16, 4, 8, 3, 20.0, 35.0, rng);
  CHECK(is_unitary(s.a_r, 1e-10));
  CHECK(is_unitary(s.a_t, 1e-10));
}

TEST_CASE("pilot power normalization tr(S^H S) = P*T") {
  RngState rng(2);
  const double power_db = 35.0;
  const CMat s = make_pilot(144, 72, power_db, rng);
  const double p = std::pow(10.0, power_db / 10.0);
  const double tr = std::pow(frobenius_norm(s), 2);  // tr(S^H S) == ||S||_F^2
  CHECK(std::fabs(tr - p * 72) / (p * 72) < 1e-12);
}

TEST_CASE("channel factorization H = A_R H_a A_T^H holds") {
  RngState rng(3);
  const ChannelScene s = generate_scene(24, 4, 12, 4, 15.0, 35.0, rng);
  const CMat rebuilt = cmul(s.a_r, cmul(s.h_angular, hermitian(s.a_t)));
  CHECK(cdiff(rebuilt, s.h) / frobenius_norm(s.h) < 1e-12);
}

TEST_CASE("angular channel has a joint column support of the declared size") {
  RngState rng(4);
  const ChannelScene s = generate_scene(32, 4, 16, 5, 15.0, 35.0, rng);
  REQUIRE(static_cast<int>(s.support.size()) == 5);
  for (int c = 0; c < s.h_angular.cols(); ++c) {
    double col_norm = 0.0;
    for (int r = 0; r < s.h_angular.rows(); ++r)
      col_norm += s.h_angular.re(r, c) * s.h_angular.re(r, c) +
                  s.h_angular.im(r, c) * s.h_angular.im(r, c);
    const bool active =
        std::find(s.support.begin(), s.support.end(), c) != s.support.end();
    if (active)
      CHECK(col_norm > 0.0);
    else
      CHECK(col_norm == 0.0);
  }
}

TEST_CASE("received signal equals H S + noise and the noise is omitted when noiseless") {
  RngState rng(5);
  const ChannelScene s = generate_scene(16, 4, 10, 3, 10.0, 35.0, rng);
  const CMat hs = cmul(s.h, s.s);
  CHECK(cdiff(s.y, cadd(hs, s.noise)) / frobenius_norm(s.y) < 1e-12);

  SceneOptions opt;
  opt.noiseless = true;
  const ChannelScene sn = generate_scene(16, 4, 10, 3, 10.0, 35.0, rng, opt);
  CHECK(frobenius_norm(sn.noise) == 0.0);
  CHECK(cdiff(sn.y, cmul(sn.h, sn.s)) == 0.0);
}

TEST_CASE("noise scaling realizes the requested snr") {
  // Average realized SNR over scenes should match the target within a few
  // percent (chi-square concentration).
  const double snr_db = 10.0;
  double num = 0.0, den = 0.0;
  for (uint64_t t = 0; t < 200; ++t) {
    RngState rng(500 + t);
    const ChannelScene s = generate_scene(16, 4, 16, 3, snr_db, 35.0, rng);
    num += std::pow(frobenius_norm(cmul(s.h, s.s)), 2);
    den += std::pow(frobenius_norm(s.noise), 2);
  }
  const double realized_db = 10.0 * std::log10(num / den);
  CHECK(std::fabs(realized_db - snr_db) < 0.2);
}

TEST_CASE("cs form satisfies Ybar = Abar Xbar + Nbar with Xbar = H_a^H") {
  RngState rng(6);
  const ChannelScene s = generate_scene(24, 4, 16, 4, 15.0, 35.0, rng);
  const CsForm cs = to_cs_form(s);
  CHECK(cdiff(cs.x_bar, hermitian(s.h_angular)) == 0.0);
  const CMat rhs = cadd(cmul(cs.a_bar, cs.x_bar), cs.n_bar);
  CHECK(cdiff(cs.y_bar, rhs) / frobenius_norm(cs.y_bar) < 1e-11);
  // Row support of Xbar equals the planted transmit-bin support.
  for (int r = 0; r < cs.x_bar.rows(); ++r) {
    double n2 = 0.0;
    for (int c = 0; c < cs.x_bar.cols(); ++c)
      n2 += cs.x_bar.re(r, c) * cs.x_bar.re(r, c) + cs.x_bar.im(r, c) * cs.x_bar.im(r, c);
    const bool active = std::find(s.support.begin(), s.support.end(), r) != s.support.end();
    CHECK((n2 > 0.0) == active);
  }
}

TEST_CASE("scene_problem doubles the sparsity for the real stacking") {
  RngState rng(7);
  const ChannelScene s = generate_scene(16, 4, 12, 3, 20.0, 35.0, rng);
  const MmvProblem p = scene_problem(to_cs_form(s), s.sparsity);
  CHECK(p.a.rows == 2 * 12);
  CHECK(p.a.cols == 2 * 16);
  CHECK(p.y.cols == 4);
  CHECK(p.k == 6);
}

TEST_CASE("noiseless recovery through the full pipeline is essentially exact") {
  RngState rng(8);
  SceneOptions opt;
  opt.noiseless = true;
  const ChannelScene s = generate_scene(32, 4, 24, 4, 30.0, 35.0, rng, opt);
  const auto est = estimate_channel(s, [](const MmvProblem& p) {
    return somp(p, {default_gamma(p.y), 2 * p.k});
  });
  CHECK(est.nmse < 1e-8);
}

TEST_CASE("estimate_from_xbar inverts the forward map on the truth") {
  RngState rng(9);
  const ChannelScene s = generate_scene(16, 4, 12, 3, 20.0, 35.0, rng);
  const CsForm cs = to_cs_form(s);
  const Mat x_real = real_stack_cols(cs.x_bar);
  const CMat h_hat = estimate_from_xbar(s, x_real);
  CHECK(nmse(h_hat, s.h) < 1e-11);
}

TEST_CASE("nmse definition") {
  CMat h(1, 2), g(1, 2);
  h.re = Mat{{3, 4}};
  CHECK(nmse(g, h) == doctest::Approx(1.0));            // zero estimate
  CHECK(nmse(h, h) == doctest::Approx(0.0));
  g.re = Mat{{3, 0}};
  CHECK(nmse(g, h) == doctest::Approx(4.0 / 5.0));
}

TEST_CASE("heavy-tail sparsity draws supports no larger than requested") {
  int seen_smaller = 0;
  for (uint64_t t = 0; t < 50; ++t) {
    RngState rng(900 + t);
    SceneOptions opt;
    opt.heavy_tail_sparsity = true;
    const ChannelScene s = generate_scene(32, 2, 16, 8, 20.0, 35.0, rng, opt);
    CHECK(static_cast<int>(s.support.size()) >= 1);
    CHECK(static_cast<int>(s.support.size()) <= 8);
    if (static_cast<int>(s.support.size()) < 8) ++seen_smaller;
  }
  CHECK(seen_smaller > 0);
}

TEST_CASE("fixed pilot option is honored") {
  RngState prng(10);
  const CMat pilot = make_pilot(16, 12, 35.0, prng);
  RngState rng(11);
  SceneOptions opt;
  opt.pilot = pilot;
  const ChannelScene s = generate_scene(16, 4, 12, 3, 20.0, 35.0, rng, opt);
  CHECK(cdiff(s.s, pilot) == 0.0);
}

TEST_CASE("channel-model identity sweep over many scenes (acceptance scale)") {
  for (uint64_t t = 0; t < 1000; ++t) {
    RngState rng(10000 + t);
    const ChannelScene s = generate_scene(16, 4, 12, 3, 15.0, 35.0, rng);
    REQUIRE(is_unitary(s.a_t, 1e-9));
    const CMat rebuilt = cmul(s.a_r, cmul(s.h_angular, hermitian(s.a_t)));
    REQUIRE(cdiff(rebuilt, s.h) / frobenius_norm(s.h) < 1e-10);
    const double p = std::pow(10.0, 35.0 / 10.0);
    REQUIRE(std::fabs(std::pow(frobenius_norm(s.s), 2) - p * 12) / (p * 12) < 1e-8);
    const CsForm cs = to_cs_form(s);
    const CMat rhs = cadd(cmul(cs.a_bar, cs.x_bar), cs.n_bar);
    REQUIRE(cdiff(cs.y_bar, rhs) / frobenius_norm(cs.y_bar) < 1e-9);
  }
}
