// Deterministic reference solver: the truncated aggregation-shattering ODE
// system integrated with the explicit midpoint (second-order Runge-Kutta)
// rule. Concentrations n_k live in a dense vector for k = 1..S (0-based
// storage, n[k-1] = n_k).
//
//   dn_k/dt = 1/2 sum_{i+j=k} K_ij n_i n_j - (1+lambda) n_k sum_j K_kj n_j
//
// for k >= 2; the monomer equation has no shattering loss factor and gains
// the debris of every shattered pair:
//
//   dn_1/dt = -n_1 sum_j K_1j n_j
//           + lambda n_1 sum_{j>=2} j K_1j n_j
//           + lambda/2 sum_{i,j>=2} (i+j) K_ij n_i n_j
//
// The 1/2 on the debris double sum makes sum_k k dn_k/dt vanish identically;
// mass then only leaves through the size cutoff, and that flux is integrated
// into leaked_mass().
//
// Separable kernels compute losses in O(S) via factor moments; the gain
// convolution runs through a radix-2 FFT once S reaches 64 (O(S log S) per
// evaluation) and falls back to a direct O(S^2/2) sum below that. The
// ballistic kernel uses precomputed dense tables (about 1.5 S^2 doubles)
// with inner loops over a reversed copy of the partner array so both
// operands advance with unit stride.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "aggfrag/errors.hpp"
#include "aggfrag/kernels.hpp"
#include "aggfrag/lambda_schedule.hpp"
#include "aggfrag/size_distribution.hpp"

namespace aggfrag {

// In-place radix-2 FFT; a.size() must be a power of two. Butterflies are
// spelled out in real arithmetic: std::complex products round-trip through
// __muldc3 and dominate the runtime otherwise.
inline void fft_pow2(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  auto* d = reinterpret_cast<double*>(a.data());  // interleaved re, im
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j |= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang =
        (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
    const double wr0 = std::cos(ang), wi0 = std::sin(ang);
    const std::size_t half = len / 2;
    for (std::size_t i = 0; i < n; i += len) {
      double wr = 1.0, wi = 0.0;
      for (std::size_t k = 0; k < half; ++k) {
        double* x = d + 2 * (i + k);
        double* y = d + 2 * (i + k + half);
        const double yr = y[0] * wr - y[1] * wi;
        const double yi = y[0] * wi + y[1] * wr;
        y[0] = x[0] - yr;
        y[1] = x[1] - yi;
        x[0] += yr;
        x[1] += yi;
        const double nwr = wr * wr0 - wi * wi0;
        wi = wr * wi0 + wi * wr0;
        wr = nwr;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < 2 * n; ++i) d[i] *= inv;
  }
}

struct FdOptions {
  std::uint32_t size_cutoff = 0;  // S
  double dt = 0.0;
  double t0 = 0.0;  // start time; lets a run restart with a coarser dt
  KernelSpec spec;
  LambdaSchedule lambda;
  std::vector<double> initial;  // n_k for k = 1..initial.size(); rest zero
};

class FdSolver {
 public:
  explicit FdSolver(FdOptions opt) : opt_(std::move(opt)), s_(opt_.size_cutoff) {
    if (s_ < 2) throw ConfigError("fd: size_cutoff must be >= 2");
    if (!(opt_.dt > 0.0) || !std::isfinite(opt_.dt))
      throw ConfigError("fd: dt must be positive and finite");
    if (opt_.initial.size() > s_)
      throw ConfigError("fd: initial distribution is longer than the size cutoff");
    n_.assign(s_, 0.0);
    for (std::size_t k = 0; k < opt_.initial.size(); ++k) {
      if (opt_.initial[k] < 0.0) throw ConfigError("fd: negative initial concentration");
      n_[k] = opt_.initial[k];
    }
    k1_.assign(s_, 0.0);
    mid_.assign(s_, 0.0);
    k2_.assign(s_, 0.0);
    rev_.assign(s_, 0.0);
    rs_.assign(s_, 0.0);
    separable_ = is_separable(opt_.spec.family);
    if (separable_) {
      fu_.resize(s_);
      fv_.resize(s_);
      pu_.assign(s_, 0.0);
      qv_.assign(s_, 0.0);
      for (std::size_t k = 0; k < s_; ++k) {
        const double x = static_cast<double>(k + 1);
        fu_[k] = kernel_factor_u(opt_.spec, x);
        fv_[k] = kernel_factor_v(opt_.spec, x);
      }
      if (s_ >= 64) {
        nfft_ = 1;
        while (nfft_ < 2 * s_) nfft_ <<= 1;
        fw_.assign(nfft_, std::complex<double>());
        fc_.assign(nfft_, std::complex<double>());
        use_fft_ = true;
      }
    } else {
      build_dense_tables();
    }
    t_ = opt_.t0;
    initial_mass_ = mass();
  }

  std::size_t size_cutoff() const { return s_; }
  double dt() const { return opt_.dt; }
  double time() const { return t_; }
  std::uint64_t steps() const { return steps_; }

  // Changing dt between steps is fine; each midpoint step only reads the
  // value once. Lets a driver re-size the step against the current state.
  void set_dt(double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt))
      throw ConfigError("fd: dt must be positive and finite");
    opt_.dt = dt;
  }

  // max_k sum_j K_kj n_j from the most recent rhs evaluation (the midpoint
  // state of the last step). Zero before the first step.
  double last_max_rowsum() const { return rowsum_max_; }
  const std::vector<double>& concentrations() const { return n_; }
  std::uint64_t clamp_events() const { return clamp_events_; }
  double clamped_mass() const { return clamped_mass_; }
  double leaked_mass() const { return leaked_mass_; }
  double initial_mass() const { return initial_mass_; }

  double mass() const {
    double m = 0.0;
    for (std::size_t k = 0; k < s_; ++k) m += static_cast<double>(k + 1) * n_[k];
    return m;
  }

  double moment(int order) const {
    double m = 0.0;
    for (std::size_t k = 0; k < s_; ++k)
      m += std::pow(static_cast<double>(k + 1), order) * n_[k];
    return m;
  }

  // dn/dt for an arbitrary state vector (length S). Exposed for testing.
  void rhs(const std::vector<double>& n, double lam, std::vector<double>& out) const {
    AGGFRAG_CHECK(n.size() == s_ && out.size() == s_, "fd rhs: bad vector length");
    if (separable_) rhs_separable(n, lam, out);
    else rhs_dense(n, lam, out);
  }

  // One explicit midpoint step. Negative results are clamped to zero (counted);
  // non-finite results raise a divergence error naming the step.
  void step() {
    const double t = time();
    const double lam1 = lambda_at(t);
    const double lam2 = lambda_at(t + 0.5 * opt_.dt);
    rhs(n_, lam1, k1_);
    const double half = 0.5 * opt_.dt;
    for (std::size_t k = 0; k < s_; ++k) mid_[k] = n_[k] + half * k1_[k];
    rhs(mid_, lam2, k2_);

    double flux = 0.0;  // sum_k k * dn_k/dt; negative of the cutoff leak rate
    double total = 0.0;
    for (std::size_t k = 0; k < s_; ++k) {
      flux += static_cast<double>(k + 1) * k2_[k];
      double v = n_[k] + opt_.dt * k2_[k];
      if (v < 0.0) {
        ++clamp_events_;
        clamped_mass_ += -static_cast<double>(k + 1) * v;
        v = 0.0;
      }
      n_[k] = v;
      total += v;
    }
    leaked_mass_ += opt_.dt * (-flux);
    t_ += opt_.dt;
    ++steps_;
    if (!std::isfinite(total))
      throw NumericsError("fd: diverged at step " + std::to_string(steps_) +
                          " (t = " + std::to_string(time()) + ")");
  }

  void advance_steps(std::uint64_t count) {
    for (std::uint64_t i = 0; i < count; ++i) step();
  }

  // Steps until time() >= t - dt*1e-6 (observation times are expected to be
  // near-multiples of dt).
  void advance_until(double t) {
    const double eps = opt_.dt * 1e-6;
    while (time() < t - eps) step();
  }

  SizeDistribution size_distribution() const {
    SizeDistribution d;
    d.time = time();
    for (std::size_t k = 0; k < s_; ++k)
      if (n_[k] > 0.0) {
        d.sizes.push_back(k + 1);
        d.concentrations.push_back(n_[k]);
      }
    return d;
  }

  // n_j(t) = 4/(t+2)^2 * (t/(t+2))^(j-1): constant kernel K=1, lambda=0,
  // monodisperse unit initial condition.
  static double exact_constant_kernel(std::uint64_t j, double t) {
    const double tp2 = t + 2.0;
    return 4.0 / (tp2 * tp2) * std::pow(t / tp2, static_cast<double>(j - 1));
  }

 private:
  double lambda_at(double t) const { return opt_.lambda(t); }

  // gain_k = sum_{i+j=k} (u_i n_i)(v_j n_j); the mirrored kernel halves fold
  // the usual 1/2 into the single product sum.
  void rhs_separable(const std::vector<double>& n, double lam,
                     std::vector<double>& out) const {
    const std::size_t s = s_;
    double big_u = 0.0, big_v = 0.0;
    for (std::size_t k = 0; k < s; ++k) {
      pu_[k] = fu_[k] * n[k];
      qv_[k] = fv_[k] * n[k];
      big_u += pu_[k];
      big_v += qv_[k];
    }
    out[0] = 0.0;
    if (use_fft_) {
      // One complex transform carries both real arrays; the product of the
      // unpacked spectra inverts to their linear convolution. Inverse-pass
      // entries below the transform's own noise scale are zeroed so roundoff
      // dust cannot seed the far tail with phantom concentrations.
      std::fill(fw_.begin(), fw_.end(), std::complex<double>());
      for (std::size_t k = 0; k < s; ++k) fw_[k] = {pu_[k], qv_[k]};
      fft_pow2(fw_, false);
      const std::size_t mask = nfft_ - 1;
      const double* w = reinterpret_cast<const double*>(fw_.data());
      double* c = reinterpret_cast<double*>(fc_.data());
      for (std::size_t m = 0; m < nfft_; ++m) {
        const std::size_t mm = (nfft_ - m) & mask;
        const double fr = w[2 * m], fi = w[2 * m + 1];
        const double gr = w[2 * mm], gi = w[2 * mm + 1];
        const double ar = 0.5 * (fr + gr), ai = 0.5 * (fi - gi);
        const double br = 0.5 * (fi + gi), bi = -0.5 * (fr - gr);
        c[2 * m] = ar * br - ai * bi;
        c[2 * m + 1] = ar * bi + ai * br;
      }
      fft_pow2(fc_, true);
      const double dust = 1e-13 * big_u * big_v;
      for (std::size_t k = 1; k < s; ++k) {
        const double g = fc_[k - 1].real();
        out[k] = g > dust ? g : 0.0;
      }
    } else {
      for (std::size_t k = 0; k < s; ++k) rev_[k] = qv_[s - 1 - k];
      const double* p = pu_.data();
      for (std::size_t k = 1; k < s; ++k) {
        // sizes: gain for size k+1 couples p[a] (size a+1) with q[k-1-a]
        const double* qr = rev_.data() + (s - 1 - k);
        double acc = 0.0;
#pragma omp simd reduction(+ : acc)
        for (std::size_t a = 0; a < k; ++a) acc += p[a] * qr[a + 1];
        out[k] = acc;
      }
    }

    // losses, debris moment and the monomer cross term in one pass
    double debris = 0.0;  // sum_{i>=2} i n_i rowsum_i
    double zmono = 0.0;   // sum_{j>=2} j K_1j n_j
    const double u1 = fu_[0], v1 = fv_[0];
    double rmax = fu_[0] * big_v + fv_[0] * big_u;
    const double rowsum1 = rmax;
    for (std::size_t k = 1; k < s; ++k) {
      const double rowsum = fu_[k] * big_v + fv_[k] * big_u;
      rmax = std::max(rmax, rowsum);
      out[k] -= (1.0 + lam) * n[k] * rowsum;
      const double sz = static_cast<double>(k + 1);
      debris += sz * n[k] * rowsum;
      zmono += sz * (u1 * fv_[k] + v1 * fu_[k]) * n[k];
    }
    out[0] = -n[0] * rowsum1 + lam * n[0] * zmono +
             lam * (debris - n[0] * zmono);
    rowsum_max_ = rmax;
  }

  void rhs_dense(const std::vector<double>& n, double lam,
                 std::vector<double>& out) const {
    const std::size_t s = s_;
    for (std::size_t k = 0; k < s; ++k) rev_[k] = n[s - 1 - k];

    out[0] = 0.0;
    for (std::size_t k = 1; k < s; ++k) {
      const double* row = conv_.data() + conv_off_[k];
      const double* nr = rev_.data() + (s - 1 - k);
      double acc = 0.0;
#pragma omp simd reduction(+ : acc)
      for (std::size_t a = 0; a < k; ++a) acc += row[a] * n[a] * nr[a + 1];
      out[k] = 0.5 * acc;
    }

    double debris = 0.0, zmono = 0.0;
    const double* k1row = krow_.data();  // K(1, .)
    for (std::size_t k = 0; k < s; ++k) {
      const double* row = krow_.data() + k * s;
      double acc = 0.0;
#pragma omp simd reduction(+ : acc)
      for (std::size_t j = 0; j < s; ++j) acc += row[j] * n[j];
      rs_[k] = acc;
    }
    rowsum_max_ = *std::max_element(rs_.begin(), rs_.end());
    for (std::size_t k = 1; k < s; ++k) {
      out[k] -= (1.0 + lam) * n[k] * rs_[k];
      const double sz = static_cast<double>(k + 1);
      debris += sz * n[k] * rs_[k];
      zmono += sz * k1row[k] * n[k];
    }
    out[0] = -n[0] * rs_[0] + lam * n[0] * zmono + lam * (debris - n[0] * zmono);
  }

  void build_dense_tables() {
    const std::size_t s = s_;
    krow_.assign(s * s, 0.0);
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = i; j < s; ++j) {
        const double v = kernel_value(opt_.spec, static_cast<double>(i + 1),
                                      static_cast<double>(j + 1));
        krow_[i * s + j] = v;
        krow_[j * s + i] = v;
      }
    conv_off_.assign(s, 0);
    std::size_t total = 0;
    for (std::size_t k = 1; k < s; ++k) {
      conv_off_[k] = total;
      total += k;
    }
    conv_.assign(total, 0.0);
    for (std::size_t k = 1; k < s; ++k) {
      double* row = conv_.data() + conv_off_[k];
      for (std::size_t a = 0; a + 1 <= k; ++a)
        row[a] = krow_[a * s + (k - 1 - a)];  // K(a+1, k-a)
    }
  }

  FdOptions opt_;
  std::size_t s_;
  bool separable_ = false;
  bool use_fft_ = false;
  std::size_t nfft_ = 0;
  std::vector<double> n_;
  double t_ = 0.0;
  std::uint64_t steps_ = 0;
  mutable double rowsum_max_ = 0.0;
  std::uint64_t clamp_events_ = 0;
  double clamped_mass_ = 0.0;
  double leaked_mass_ = 0.0;
  double initial_mass_ = 0.0;

  // scratch (single-threaded use per instance)
  mutable std::vector<double> k1_, mid_, k2_, rev_, rs_, pu_, qv_;
  mutable std::vector<std::complex<double>> fw_, fc_;

  // separable tables
  std::vector<double> fu_, fv_;

  // dense tables
  std::vector<double> krow_;         // S x S symmetric kernel matrix
  std::vector<double> conv_;         // triangular K(i, k-i) rows
  std::vector<std::size_t> conv_off_;
};

}  // namespace aggfrag
