#include "mmv/data_gen.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "mmv/classic_solvers.hpp"
#include "mmv/numerics.hpp"

namespace mmv {

namespace {

// Shared support of k/2 (low, low + n/2) row pairs, values N(0, 1/2): the
// planted analogue of a real-stacked jointly-sparse complex signal.
Mat plant_paired_sparse(int n, int num_cols, int k, RngState& rng,
                        std::vector<int>* support_out = nullptr) {
  if (n % 2 != 0 || k % 2 != 0)
    throw std::invalid_argument("plant_paired_sparse: n and k must be even");
  const int half = n / 2;
  std::vector<int> perm(half);
  for (int i = 0; i < half; ++i) perm[i] = i;
  for (int i = half - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.next_u64() % static_cast<uint64_t>(i + 1));
    std::swap(perm[i], perm[j]);
  }
  std::vector<int> bins(perm.begin(), perm.begin() + k / 2);
  std::sort(bins.begin(), bins.end());
  const double s = 1.0 / std::sqrt(2.0);
  Mat x(n, num_cols);
  for (int b : bins)
    for (int c = 0; c < num_cols; ++c) {
      x(b, c) = s * rng.normal();
      x(b + half, c) = s * rng.normal();
    }
  if (support_out) {
    support_out->clear();
    for (int b : bins) support_out->push_back(b);
    for (int b : bins) support_out->push_back(b + half);
    std::sort(support_out->begin(), support_out->end());
  }
  return x;
}

Mat plant_for(const TrainDataOptions& opt, int n, int num_cols, int k, RngState& rng,
              std::vector<int>* support_out = nullptr) {
  return opt.paired_supports ? plant_paired_sparse(n, num_cols, k, rng, support_out)
                             : plant_joint_sparse(n, num_cols, k, rng, support_out);
}

}  // namespace

std::vector<double> normalize_input(std::vector<double> v) {
  double n2 = 0.0;
  for (double x : v) n2 += x * x;
  if (n2 == 0.0) return v;
  const double s = std::sqrt(static_cast<double>(v.size()) / n2);
  for (double& x : v) x *= s;
  return v;
}

Mat plant_joint_sparse(int n, int num_cols, int k, RngState& rng, std::vector<int>* support_out) {
  if (k > n) throw std::invalid_argument("plant_joint_sparse: k > n");
  // Draw the shared support uniformly without replacement.
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.next_u64() % static_cast<uint64_t>(i + 1));
    std::swap(perm[i], perm[j]);
  }
  std::vector<int> support(perm.begin(), perm.begin() + k);
  std::sort(support.begin(), support.end());
  Mat x(n, num_cols);
  for (int idx : support)
    for (int c = 0; c < num_cols; ++c) x(idx, c) = rng.normal();
  if (support_out) *support_out = support;
  return x;
}

BlockPairSet generate_block_pairs(const Mat& a, int num_cols, int k, int num_problems,
                                  RngState& rng, const TrainDataOptions& opt) {
  const int m = a.rows, n = a.cols;
  if (k > n || k > m) throw std::invalid_argument("generate_block_pairs: k too large");
  std::vector<double> block_norm(n, 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) block_norm[j] += a(i, j) * a(i, j);
  for (double v : block_norm)
    if (v == 0.0) throw std::invalid_argument("generate_block_pairs: zero block norm");

  BlockPairSet set;
  set.m = m;
  set.n = n;
  set.K = num_cols;
  set.k = k;
  set.seed = rng.seed();

  for (int prob = 0; prob < num_problems; ++prob) {
    RngState prng = rng.derive(static_cast<uint64_t>(prob));
    std::vector<int> support;
    const Mat x = plant_for(opt, n, num_cols, k, prng, &support);
    Mat y = matmul(a, x);
    if (opt.train_snr_db) {
      const double snr_lin = std::pow(10.0, *opt.train_snr_db / 10.0);
      const double yn = frobenius_norm(y);
      const double sigma = std::sqrt(yn * yn / (snr_lin * m * num_cols));
      y = add(y, scale(gaussian(prng, m, num_cols), sigma));
    }
    std::vector<char> planted(n, 0);
    for (int b : support) planted[b] = 1;

    // Residual as an m x K matrix; the stacked form is vec(R^T). For block b
    // of Phi = A (x) I_K, the correlation ||Phi[b]^T r|| is row b of A^T R.
    // The greedy teacher picks the strongest block to drive the residual
    // trajectory; the target holds the planted coefficients of every block
    // not yet selected, so the network learns which blocks still explain the
    // residual rather than imitating the teacher's (possibly wrong) single
    // pick. Signed half-scale values (rather than a 0/1 indicator) keep the
    // map close to linear -- the solver ranks blocks by squared score, so
    // only relative magnitudes matter -- and inside the tanh output range.
    Mat r = y;
    std::vector<char> taken(n, 0);
    for (int step = 0; step < k; ++step) {
      const Mat corr = matmul(transpose(a), r);
      int best = -1;
      double best_val = -1.0;
      for (int b = 0; b < n; ++b) {
        if (taken[b]) continue;
        double v = 0.0;
        for (int c = 0; c < num_cols; ++c) v += corr(b, c) * corr(b, c);
        if (v > best_val) {
          best_val = v;
          best = b;
        }
      }
      TrainingPair pair;
      pair.input = stack_rows(r).col_vec(0);
      pair.target.assign(static_cast<size_t>(n) * num_cols, 0.0);
      for (int b = 0; b < n; ++b)
        if (planted[b] && !taken[b])
          for (int c = 0; c < num_cols; ++c)
            pair.target[static_cast<size_t>(b) * num_cols + c] = 0.5 * x(b, c);
      set.pairs.push_back(std::move(pair));
      taken[best] = 1;

      // Remove the selected block's single-block least-squares fit.
      const Mat a_b = a.cols_subset({best});
      r = sub(r, matmul(a_b, lstsq(a_b, r)));
    }
  }
  return set;
}

ResidualPairSet generate_residual_pairs(const Mat& a, int num_cols, int k, int num_problems,
                                        int iters, RngState& rng,
                                        const TrainDataOptions& opt) {
  const int m = a.rows, n = a.cols;
  if (k > m || m > n) throw std::invalid_argument("generate_residual_pairs: need k <= m <= n");
  const Mat at = transpose(a);

  ResidualPairSet set;
  set.m = m;
  set.n = n;
  set.K = num_cols;
  set.k = k;
  set.seed = rng.seed();

  for (int prob = 0; prob < num_problems; ++prob) {
    RngState prng = rng.derive(static_cast<uint64_t>(prob));
    std::vector<int> truth;
    const Mat x = plant_for(opt, n, num_cols, k, prng, &truth);
    Mat y = matmul(a, x);
    if (opt.train_snr_db) {
      const double snr_lin = std::pow(10.0, *opt.train_snr_db / 10.0);
      const double yn = frobenius_norm(y);
      const double sigma = std::sqrt(yn * yn / (snr_lin * m * num_cols));
      y = add(y, scale(gaussian(prng, m, num_cols), sigma));
    }
    const double ynorm = frobenius_norm(y);
    if (ynorm == 0.0) continue;
    const double gamma = 1e-6 * ynorm;

    // Step 0: per-column support from the k largest |A^T y|, then the
    // projection residual of Eq.-style refitting.
    std::vector<std::vector<int>> support(num_cols);
    Mat r(m, num_cols);
    const Mat corr0 = matmul(at, y);
    for (int c = 0; c < num_cols; ++c) {
      support[c] = top_k_abs(corr0.col_vec(c), k);
      r.set_col(c, projection_residual(a.cols_subset(support[c]), y.col(c)));
    }

    // Target at each step: the planted coefficients missing from the support
    // that produced the residual the network sees -- exactly the rows whose
    // energy the residual still carries -- not the teacher's correlation
    // picks, so the network is free to outperform the correlation rule.
    // Signed half-scale values keep the map close to linear (the solver
    // ranks rows by |score|) and inside the tanh output range.
    for (int step = 0; step < iters; ++step) {
      if (frobenius_norm(r) <= gamma) break;
      SequencePair seq;
      const Mat corr = matmul(at, r);
      for (int c = 0; c < num_cols; ++c) {
        seq.inputs.push_back(r.col_vec(c));
        std::vector<double> target(n, 0.0);
        std::vector<char> have(n, 0);
        for (int idx : support[c]) have[idx] = 1;
        for (int idx : truth)
          if (!have[idx]) target[idx] = 0.5 * x(idx, c);
        seq.targets.push_back(std::move(target));
        support[c] = top_k_abs(corr.col_vec(c), k);
      }
      set.sequences.push_back(std::move(seq));
      set.planted.push_back(truth);
      for (int c = 0; c < num_cols; ++c)
        r.set_col(c, projection_residual(a.cols_subset(support[c]), y.col(c)));
    }
  }
  return set;
}

ResidualPairSet merge_equalized_parts(const std::vector<ResidualPairSet>& parts) {
  if (parts.empty()) throw std::invalid_argument("merge_equalized_parts: no parts");
  size_t min_count = parts[0].sequences.size();
  for (const auto& p : parts) min_count = std::min(min_count, p.sequences.size());
  ResidualPairSet out = parts[0];
  out.sequences.clear();
  out.planted.clear();
  for (const auto& p : parts) {
    if (p.m != out.m || p.n != out.n || p.K != out.K || p.k != out.k)
      throw std::invalid_argument("merge_equalized_parts: mismatched part dimensions");
    out.sequences.insert(out.sequences.end(), p.sequences.begin(),
                         p.sequences.begin() + static_cast<long>(min_count));
    if (p.planted.size() >= min_count)
      out.planted.insert(out.planted.end(), p.planted.begin(),
                         p.planted.begin() + static_cast<long>(min_count));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset persistence

namespace {

constexpr char kMagic[7] = {'M', 'M', 'V', 'D', 'S', '1', '\0'};

void write_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<char*>(b), 4);
}

void write_u64(std::ostream& out, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<char*>(b), 8);
}

void write_f64(std::ostream& out, double d) {
  uint64_t v;
  std::memcpy(&v, &d, 8);
  write_u64(out, v);
}

struct Reader {
  std::ifstream in;
  size_t offset = 0;

  explicit Reader(const std::string& path) : in(path, std::ios::binary) {
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  }
  void read(char* buf, size_t n) {
    in.read(buf, static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in.gcount()) != n)
      throw std::runtime_error("dataset file truncated at byte offset " +
                               std::to_string(offset + static_cast<size_t>(in.gcount())));
    offset += n;
  }
  uint8_t read_u8() {
    char b;
    read(&b, 1);
    return static_cast<uint8_t>(b);
  }
  uint32_t read_u32() {
    unsigned char b[4];
    read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
  }
  uint64_t read_u64() {
    unsigned char b[8];
    read(reinterpret_cast<char*>(b), 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
  }
  double read_f64() {
    const uint64_t v = read_u64();
    double d;
    std::memcpy(&d, &v, 8);
    return d;
  }
};

void write_header(std::ostream& out, uint8_t kind, int m, int n, int K, int k, uint64_t count) {
  out.write(kMagic, sizeof(kMagic));
  out.put(static_cast<char>(kind));
  write_u32(out, static_cast<uint32_t>(m));
  write_u32(out, static_cast<uint32_t>(n));
  write_u32(out, static_cast<uint32_t>(K));
  write_u32(out, static_cast<uint32_t>(k));
  write_u64(out, count);
}

void read_header(Reader& r, uint8_t expected_kind, int& m, int& n, int& K, int& k,
                 uint64_t& count, const std::string& path) {
  char magic[7];
  r.read(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("bad magic in " + path + ": expected \"MMVDS1\\0\"");
  const uint8_t kind = r.read_u8();
  if (kind != expected_kind)
    throw std::runtime_error("dataset kind mismatch in " + path + ": expected " +
                             std::to_string(expected_kind) + ", found " + std::to_string(kind));
  m = static_cast<int>(r.read_u32());
  n = static_cast<int>(r.read_u32());
  K = static_cast<int>(r.read_u32());
  k = static_cast<int>(r.read_u32());
  count = r.read_u64();
}

}  // namespace

void save_block_pairs(const std::string& path, const BlockPairSet& set) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset file: " + path);
  write_header(out, 1, set.m, set.n, set.K, set.k, set.pairs.size());
  for (const auto& p : set.pairs) {
    for (double v : p.input) write_f64(out, v);
    for (double v : p.target) write_f64(out, v);
  }
  if (!out) throw std::runtime_error("write failure: " + path);
}

BlockPairSet load_block_pairs(const std::string& path) {
  Reader r(path);
  BlockPairSet set;
  uint64_t count = 0;
  read_header(r, 1, set.m, set.n, set.K, set.k, count, path);
  const size_t in_len = static_cast<size_t>(set.m) * set.K;
  const size_t out_len = static_cast<size_t>(set.n) * set.K;
  for (uint64_t i = 0; i < count; ++i) {
    TrainingPair p;
    p.input.resize(in_len);
    p.target.resize(out_len);
    for (double& v : p.input) v = r.read_f64();
    for (double& v : p.target) v = r.read_f64();
    set.pairs.push_back(std::move(p));
  }
  return set;
}

void save_residual_pairs(const std::string& path, const ResidualPairSet& set) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset file: " + path);
  write_header(out, 2, set.m, set.n, set.K, set.k, set.sequences.size());
  for (const auto& s : set.sequences) {
    for (const auto& v : s.inputs)
      for (double x : v) write_f64(out, x);
    for (const auto& v : s.targets)
      for (double x : v) write_f64(out, x);
  }
  if (!out) throw std::runtime_error("write failure: " + path);
}

ResidualPairSet load_residual_pairs(const std::string& path) {
  Reader r(path);
  ResidualPairSet set;
  uint64_t count = 0;
  read_header(r, 2, set.m, set.n, set.K, set.k, count, path);
  for (uint64_t i = 0; i < count; ++i) {
    SequencePair s;
    s.inputs.assign(set.K, std::vector<double>(set.m));
    s.targets.assign(set.K, std::vector<double>(set.n));
    for (auto& v : s.inputs)
      for (double& x : v) x = r.read_f64();
    for (auto& v : s.targets)
      for (double& x : v) x = r.read_f64();
    set.sequences.push_back(std::move(s));
  }
  return set;
}

void export_block_pairs_csv(const std::string& path, const BlockPairSet& set) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write csv: " + path);
  out << "pair,role,values\n";
  for (size_t i = 0; i < set.pairs.size(); ++i) {
    for (int role = 0; role < 2; ++role) {
      const auto& v = role ? set.pairs[i].target : set.pairs[i].input;
      out << i << ',' << (role ? "target" : "input");
      for (double x : v) out << ',' << x;
      out << '\n';
    }
  }
}

void export_residual_pairs_csv(const std::string& path, const ResidualPairSet& set) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write csv: " + path);
  out << "sequence,step,role,values\n";
  for (size_t i = 0; i < set.sequences.size(); ++i) {
    const auto& s = set.sequences[i];
    for (size_t t = 0; t < s.inputs.size(); ++t) {
      for (int role = 0; role < 2; ++role) {
        const auto& v = role ? s.targets[t] : s.inputs[t];
        out << i << ',' << t << ',' << (role ? "target" : "input");
        for (double x : v) out << ',' << x;
        out << '\n';
      }
    }
  }
}

}  // namespace mmv
