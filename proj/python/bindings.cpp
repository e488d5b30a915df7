#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <complex>
#include <stdexcept>
#include <string>

#include "mmv/classic_solvers.hpp"
#include "mmv/dnn_solvers.hpp"
#include "mmv/mimo_channel.hpp"
#include "mmv/neural.hpp"
#include "mmv/numerics.hpp"
#include "mmv/rng.hpp"

namespace py = pybind11;
using namespace mmv;

namespace {

Mat to_mat(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
  Mat m(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
  std::copy(arr.data(), arr.data() + arr.size(), m.data.begin());
  return m;
}

py::array_t<double> to_numpy(const Mat& m) {
  py::array_t<double> out({m.rows, m.cols});
  std::copy(m.data.begin(), m.data.end(), out.mutable_data());
  return out;
}

py::array_t<std::complex<double>> to_numpy(const CMat& m) {
  py::array_t<std::complex<double>> out({m.rows(), m.cols()});
  auto* p = out.mutable_data();
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      p[static_cast<size_t>(i) * m.cols() + j] = {m.re(i, j), m.im(i, j)};
  return out;
}

CMat to_cmat(
    const py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>&
        arr) {
  if (arr.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
  CMat m(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
  const auto* p = arr.data();
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) {
      const auto z = p[static_cast<size_t>(i) * m.cols() + j];
      m.re(i, j) = z.real();
      m.im(i, j) = z.imag();
    }
  return m;
}

py::dict result_dict(const RecoveryResult& r) {
  py::dict d;
  d["x_hat"] = to_numpy(r.x_hat);
  d["support"] = r.support;
  d["residual_norm_history"] = r.residual_norm_history;
  d["iterations"] = r.iterations;
  d["converged"] = r.converged;
  return d;
}

RecoveryResult dispatch(const MmvProblem& p, const std::string& method,
                        const StoppingRule& stop, const std::string& weights,
                        double lambda, int fista_iters) {
  if (method == "omp") return omp(p, stop);
  if (method == "somp") return somp(p, stop);
  if (method == "sp") return subspace_pursuit(p, stop);
  if (method == "glasso") return group_lasso(p, lambda, fista_iters);
  if (method == "alg1") return algorithm_one(p, load_mlp(weights), stop);
  if (method == "alg2") return algorithm_two(p, load_rnn(weights), stop);
  throw std::invalid_argument("unknown method: " + method);
}

}  // namespace

PYBIND11_MODULE(_mmvrec, m) {
  m.doc() = "jointly-sparse MMV recovery and massive-MIMO channel estimation";

  m.def(
      "recover",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& y, int k,
         const std::string& method, double gamma, int max_iterations,
         const std::string& weights, double lambda, int fista_iters) {
        MmvProblem p{to_mat(a), to_mat(y), k};
        p.validate();
        StoppingRule stop{gamma < 0.0 ? default_gamma(p.y) : gamma,
                          max_iterations > 0 ? max_iterations : 2 * k};
        return result_dict(dispatch(p, method, stop, weights, lambda, fista_iters));
      },
      py::arg("a"), py::arg("y"), py::arg("k"), py::arg("method") = "somp",
      py::arg("gamma") = -1.0, py::arg("max_iterations") = 0, py::arg("weights") = "",
      py::arg("lambda_") = 0.1, py::arg("fista_iters") = 500,
      "Solve an MMV problem Y = A X with the named method "
      "(omp|somp|sp|glasso|alg1|alg2).");

  py::class_<ChannelScene>(m, "ChannelScene")
      .def_property_readonly("h", [](const ChannelScene& s) { return to_numpy(s.h); })
      .def_property_readonly("h_angular",
                             [](const ChannelScene& s) { return to_numpy(s.h_angular); })
      .def_property_readonly("y", [](const ChannelScene& s) { return to_numpy(s.y); })
      .def_property_readonly("pilots", [](const ChannelScene& s) { return to_numpy(s.s); })
      .def_readonly("support", &ChannelScene::support)
      .def_readonly("noise_sigma", &ChannelScene::noise_sigma)
      .def_readonly("snr_db", &ChannelScene::snr_db)
      .def_readonly("sparsity", &ChannelScene::sparsity);

  m.def(
      "generate_scene",
      [](int m_tx, int n_rx, int t_pilots, int sparsity, double snr_db, double power_db,
         uint64_t seed, bool noiseless) {
        RngState rng(seed);
        SceneOptions opt;
        opt.noiseless = noiseless;
        return generate_scene(m_tx, n_rx, t_pilots, sparsity, snr_db, power_db, rng, opt);
      },
      py::arg("m_tx") = 144, py::arg("n_rx") = 4, py::arg("t_pilots") = 72,
      py::arg("sparsity") = 18, py::arg("snr_db") = 30.0, py::arg("power_db") = 35.0,
      py::arg("seed") = 1, py::arg("noiseless") = false,
      "Draw one synthetic downlink scene.");

  m.def(
      "estimate_channel",
      [](const ChannelScene& scene, const std::string& method, const std::string& weights,
         double lambda, int fista_iters) {
        const auto est = estimate_channel(scene, [&](const MmvProblem& p) {
          const double gamma = scene.noiseless
                                   ? default_gamma(p.y)
                                   : noise_gamma(p.a.rows / 2, p.y.cols, scene.noise_sigma);
          return dispatch(p, method, {gamma, 2 * p.k}, weights, lambda, fista_iters);
        });
        py::dict d;
        d["h_hat"] = to_numpy(est.h_hat);
        d["nmse"] = est.nmse;
        d["iterations"] = est.iterations;
        return d;
      },
      py::arg("scene"), py::arg("method") = "somp", py::arg("weights") = "",
      py::arg("lambda_") = 0.1, py::arg("fista_iters") = 500,
      "Estimate the channel of a scene with the named solver; returns h_hat and nmse.");

  m.def(
      "nmse",
      [](const py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>&
             h_hat,
         const py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>&
             h_true) { return nmse(to_cmat(h_hat), to_cmat(h_true)); },
      py::arg("h_hat"), py::arg("h_true"));

  m.def("inspect_weights", &inspect_weights, py::arg("path"),
        "Return (kind, [(rows, cols), ...]) for a weight file.");

  m.def(
      "lstsq",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& b) {
        return to_numpy(lstsq(to_mat(a), to_mat(b)));
      },
      py::arg("a"), py::arg("b"));
}
