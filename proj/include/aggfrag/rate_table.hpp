// Collision-frequency bookkeeping for the exact-rate engine. Keeps, for every
// bucket class and every large particle, enough state to (a) report the total
// rate T = sum_i S_i with S_i = sum_{j!=i} K(s_i,s_j) and (b) draw a pair with
// probability proportional to K.
//
// Two representations:
//  - separable kernels: K(x,y) = u(x)v(y) + v(x)u(y). Only the factor sums
//    U = sum u, V = sum v, D = sum K(s,s) and per-block partial sums are kept;
//    every event updates them in O(1) and a draw costs O(B/64 + 64 + L).
//  - ballistic: dense per-class row sums, updated in O(B + L) kernel
//    evaluations per event; draws cost O(B + L).
//
// Rows are kept for every size 1..B, occupied or not, so a previously empty
// class needs no special casing on insert. Incremental float drift is bounded
// by the caller's periodic rebuild() cadence; scans clamp to the last valid
// candidate when rounding pushes the target past the partial sums.
//
// The large-particle arrays mirror ParticleStore's large list exactly,
// including its swap-remove order; apply_event must be called with the same
// refs that were passed to ParticleStore::remove_pair.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "aggfrag/errors.hpp"
#include "aggfrag/kernels.hpp"
#include "aggfrag/particle_store.hpp"
#include "aggfrag/rng.hpp"

namespace aggfrag {

class RateTable {
 public:
  RateTable(const KernelSpec& spec, const ParticleStore& store)
      : spec_(spec), separable_(is_separable(spec.family)), threshold_(store.threshold()) {
    const std::uint64_t nblocks =
        (threshold_ + ParticleStore::kBlock - 1) / ParticleStore::kBlock;
    if (separable_) {
      fu_.resize(threshold_ + 1);
      fv_.resize(threshold_ + 1);
      fself_.resize(threshold_ + 1);
      for (std::uint64_t s = 1; s <= threshold_; ++s) {
        const double x = static_cast<double>(s);
        fu_[s] = kernel_factor_u(spec_, x);
        fv_[s] = kernel_factor_v(spec_, x);
        fself_[s] = 2.0 * fu_[s] * fv_[s];
      }
      bu_.assign(nblocks, 0.0);
      bv_.assign(nblocks, 0.0);
      bd_.assign(nblocks, 0.0);
    } else {
      cb_.resize(threshold_ + 1);
      inv_.resize(threshold_ + 1);
      for (std::uint64_t s = 1; s <= threshold_; ++s) {
        cb_[s] = std::cbrt(static_cast<double>(s));
        inv_[s] = 1.0 / static_cast<double>(s);
      }
      brow_.assign(threshold_ + 1, 0.0);
      bw_.assign(nblocks, 0.0);
    }
    rebuild(store);
  }

  double total_rate() const { return separable_ ? 2.0 * U_ * V_ - D_ : T_; }

  void rebuild(const ParticleStore& store) {
    if (separable_) rebuild_separable(store);
    else rebuild_dense(store);
  }

  // Update after one event. `a` and `b` are the refs the engine removed via
  // ParticleStore::remove_pair(a, b); `inserted`/`count` describe the
  // particles added afterwards. `store` is the post-event store.
  void apply_event(const ParticleStore& store, const ParticleRef& a,
                   const ParticleRef& b, std::uint64_t inserted, std::uint64_t count) {
    mirror_remove_pair(a, b);
    if (separable_) apply_separable(inserted, count, a.size, b.size);
    else apply_dense(store, a.size, b.size, inserted, count);
  }

  // Frequency S of one particle in bucket class s (self-pair excluded).
  double particle_rate_bucket(std::uint64_t s) const {
    if (separable_) return fu_[s] * V_ + fv_[s] * U_ - fself_[s];
    return brow_[s] - kern_bucket(s, cb_[s], inv_[s]);
  }

  double particle_rate_large(const ParticleStore& store, std::uint64_t pos) const {
    if (separable_)
      return lu_[pos] * V_ + lv_[pos] * U_ - 2.0 * lu_[pos] * lv_[pos];
    const double x = static_cast<double>(store.large_sizes()[pos]);
    return lrow_[pos] - kernel_value(spec_, x, x);
  }

  // Draw (i, j) with probability proportional to K(s_i, s_j). Consumes two
  // uniform doubles: one for the first particle (weight S_i), one for the
  // second (weight K(s_i, s_j), j != i).
  std::pair<ParticleRef, ParticleRef> sample_pair(const ParticleStore& store, Rng& rng) const {
    const ParticleRef first = sample_first(store, rng);
    const ParticleRef second = sample_second(store, rng, first);
    return {first, second};
  }

 private:
  static constexpr std::uint64_t kBlock = ParticleStore::kBlock;
  std::uint64_t block_of(std::uint64_t size) const { return (size - 1) / kBlock; }
  std::uint64_t block_lo(std::uint64_t b) const { return b * kBlock + 1; }
  std::uint64_t block_hi(std::uint64_t b) const {
    return std::min(threshold_, (b + 1) * kBlock);
  }

  // ---- separable bookkeeping ----

  double u_of(std::uint64_t s) const {
    return s <= threshold_ ? fu_[s] : kernel_factor_u(spec_, static_cast<double>(s));
  }
  double v_of(std::uint64_t s) const {
    return s <= threshold_ ? fv_[s] : kernel_factor_v(spec_, static_cast<double>(s));
  }

  void add_class_separable(std::uint64_t s, double mult) {
    const double u = u_of(s), v = v_of(s);
    U_ += mult * u;
    V_ += mult * v;
    D_ += mult * 2.0 * u * v;
    if (s <= threshold_) {
      const std::uint64_t b = block_of(s);
      bu_[b] += mult * u;
      bv_[b] += mult * v;
      bd_[b] += mult * 2.0 * u * v;
    }
  }

  void apply_separable(std::uint64_t inserted, std::uint64_t count,
                       std::uint64_t removed_a, std::uint64_t removed_b) {
    add_class_separable(removed_a, -1.0);
    add_class_separable(removed_b, -1.0);
    add_class_separable(inserted, static_cast<double>(count));
    if (inserted > threshold_) {
      for (std::uint64_t c = 0; c < count; ++c) {
        lu_.push_back(u_of(inserted));
        lv_.push_back(v_of(inserted));
      }
    }
  }

  void rebuild_separable(const ParticleStore& store) {
    U_ = V_ = D_ = 0.0;
    std::fill(bu_.begin(), bu_.end(), 0.0);
    std::fill(bv_.begin(), bv_.end(), 0.0);
    std::fill(bd_.begin(), bd_.end(), 0.0);
    const std::uint64_t hi = std::min<std::uint64_t>(threshold_, store.max_size());
    for (std::uint64_t s = 1; s <= hi; ++s) {
      const std::uint64_t m = store.bucket_count(s);
      if (m) add_class_separable(s, static_cast<double>(m));
    }
    const auto& large = store.large_sizes();
    lu_.resize(large.size());
    lv_.resize(large.size());
    for (std::size_t p = 0; p < large.size(); ++p) {
      lu_[p] = u_of(large[p]);
      lv_[p] = v_of(large[p]);
      U_ += lu_[p];
      V_ += lv_[p];
      D_ += 2.0 * lu_[p] * lv_[p];
    }
  }

  // ---- dense (ballistic) bookkeeping ----

  double kern_bucket(std::uint64_t s, double cbx, double invx) const {
    const double c = cb_[s] + cbx;
    return spec_.amplitude * c * c * std::sqrt(inv_[s] + invx);
  }

  void apply_dense(const ParticleStore& store, std::uint64_t sa, std::uint64_t sb,
                   std::uint64_t inserted, std::uint64_t count) {
    const double xa = static_cast<double>(sa), xb = static_cast<double>(sb);
    const double xn = static_cast<double>(inserted);
    const double cba = std::cbrt(xa), inva = 1.0 / xa;
    const double cbb = std::cbrt(xb), invb = 1.0 / xb;
    const double cbn = std::cbrt(xn), invn = 1.0 / xn;
    const double q = static_cast<double>(count);

    for (std::uint64_t s = 1; s <= threshold_; ++s)
      brow_[s] += q * kern_bucket(s, cbn, invn) - kern_bucket(s, cba, inva) -
                  kern_bucket(s, cbb, invb);
    const auto& large = store.large_sizes();
    for (std::size_t p = 0; p < lrow_.size(); ++p) {
      const double x = static_cast<double>(large[p]);
      lrow_[p] += q * kernel_value(spec_, x, xn) - kernel_value(spec_, x, xa) -
                  kernel_value(spec_, x, xb);
    }
    if (inserted > threshold_)
      for (std::uint64_t c = 0; c < count; ++c)
        lrow_.push_back(fresh_large_row(store, inserted));
    refresh_dense_totals(store);
  }

  // Row sum of one particle of `size` against the whole store, counting an
  // entry of the same size (including the particle's own list slot) once per
  // occurrence. Used after inserts, where the store already holds the entry.
  double fresh_large_row(const ParticleStore& store, std::uint64_t size) const {
    const double x = static_cast<double>(size);
    const double cbx = std::cbrt(x), invx = 1.0 / x;
    double row = 0.0;
    const std::uint64_t hi = std::min<std::uint64_t>(threshold_, store.max_size());
    for (std::uint64_t s = 1; s <= hi; ++s) {
      const std::uint64_t m = store.bucket_count(s);
      if (m) row += static_cast<double>(m) * kern_bucket(s, cbx, invx);
    }
    for (const std::uint64_t sp : store.large_sizes())
      row += kernel_value(spec_, x, static_cast<double>(sp));
    return row;
  }

  void rebuild_dense(const ParticleStore& store) {
    const std::uint64_t hi = std::min<std::uint64_t>(threshold_, store.max_size());
    const auto& large = store.large_sizes();
    for (std::uint64_t s = 1; s <= threshold_; ++s) {
      double row = 0.0;
      for (std::uint64_t c = 1; c <= hi; ++c) {
        const std::uint64_t m = store.bucket_count(c);
        if (m) row += static_cast<double>(m) * kern_bucket(c, cb_[s], inv_[s]);
      }
      for (const std::uint64_t sp : large)
        row += kern_bucket(s, std::cbrt(static_cast<double>(sp)),
                           1.0 / static_cast<double>(sp));
      brow_[s] = row;
    }
    lrow_.resize(large.size());
    for (std::size_t p = 0; p < large.size(); ++p)
      lrow_[p] = fresh_large_row(store, large[p]);
    refresh_dense_totals(store);
  }

  void refresh_dense_totals(const ParticleStore& store) {
    T_ = 0.0;
    std::uint64_t b = 0;
    double wblk = 0.0;
    for (std::uint64_t s = 1; s <= threshold_; ++s) {
      const std::uint64_t m = store.bucket_count(s);
      if (m)
        wblk += static_cast<double>(m) *
                (brow_[s] - kern_bucket(s, cb_[s], inv_[s]));
      if (s == block_hi(b)) {
        bw_[b] = wblk;
        T_ += wblk;
        wblk = 0.0;
        ++b;
      }
    }
    const auto& large = store.large_sizes();
    for (std::size_t p = 0; p < large.size(); ++p) {
      const double x = static_cast<double>(large[p]);
      T_ += lrow_[p] - kernel_value(spec_, x, x);
    }
  }

  // ---- structural mirroring of the store's large list ----

  void mirror_remove_pair(const ParticleRef& a, const ParticleRef& b) {
    if (a.large && b.large && a.pos < b.pos) {
      mirror_remove(b);
      mirror_remove(a);
    } else {
      mirror_remove(a);
      mirror_remove(b);
    }
  }

  void mirror_remove(const ParticleRef& r) {
    if (!r.large) return;
    if (separable_) {
      AGGFRAG_CHECK(r.pos < lu_.size(), "rate table: stale large reference");
      lu_[r.pos] = lu_.back();
      lu_.pop_back();
      lv_[r.pos] = lv_.back();
      lv_.pop_back();
    } else {
      AGGFRAG_CHECK(r.pos < lrow_.size(), "rate table: stale large reference");
      lrow_[r.pos] = lrow_.back();
      lrow_.pop_back();
    }
  }

  // ---- sampling ----

  ParticleRef sample_first(const ParticleStore& store, Rng& rng) const {
    const double target = rng.uniform01() * total_rate();
    double acc = 0.0;
    const std::uint64_t nblocks = separable_ ? bu_.size() : bw_.size();
    for (std::uint64_t b = 0; b < nblocks; ++b) {
      const double wb = std::max(
          0.0, separable_ ? bu_[b] * V_ + bv_[b] * U_ - bd_[b] : bw_[b]);
      if (target >= acc + wb) {
        acc += wb;
        continue;
      }
      for (std::uint64_t s = block_lo(b); s <= block_hi(b); ++s) {
        const std::uint64_t m = store.bucket_count(s);
        if (!m) continue;
        const double ws =
            std::max(0.0, static_cast<double>(m) * particle_rate_bucket(s));
        if (target < acc + ws) return ParticleRef{s, 0, false};
        acc += ws;
      }
      // block sum overshot its contents by rounding; keep scanning
    }
    const auto& large = store.large_sizes();
    for (std::size_t p = 0; p < large.size(); ++p) {
      const double wp = std::max(0.0, particle_rate_large(store, p));
      if (target < acc + wp) return ParticleRef{large[p], p, true};
      acc += wp;
    }
    return last_candidate(store, nullptr);
  }

  ParticleRef sample_second(const ParticleStore& store, Rng& rng,
                            const ParticleRef& first) const {
    const double fs = static_cast<double>(first.size);
    const double budget = first.large ? particle_rate_large(store, first.pos)
                                      : particle_rate_bucket(first.size);
    const double target = rng.uniform01() * budget;
    const double uf = separable_ ? u_of(first.size) : 0.0;
    const double vf = separable_ ? v_of(first.size) : 0.0;
    const double cbf = separable_ ? 0.0 : std::cbrt(fs);
    const double invf = separable_ ? 0.0 : 1.0 / fs;
    const std::uint64_t own_class = first.large ? 0 : first.size;

    double acc = 0.0;
    const std::uint64_t nblocks = separable_ ? bu_.size() : bw_.size();
    for (std::uint64_t b = 0; b < nblocks; ++b) {
      if (separable_) {
        double wb = uf * bv_[b] + vf * bu_[b];
        if (own_class && block_of(own_class) == b) wb -= fself_[own_class];
        wb = std::max(0.0, wb);
        if (target >= acc + wb) {
          acc += wb;
          continue;
        }
      }
      for (std::uint64_t s = block_lo(b); s <= block_hi(b); ++s) {
        std::uint64_t m = store.bucket_count(s);
        if (s == own_class) --m;
        if (!m) continue;
        const double k = separable_ ? uf * fv_[s] + vf * fu_[s]
                                    : kern_bucket(s, cbf, invf);
        const double ws = static_cast<double>(m) * std::max(0.0, k);
        if (target < acc + ws) return ParticleRef{s, 0, false};
        acc += ws;
      }
    }
    const auto& large = store.large_sizes();
    for (std::size_t p = 0; p < large.size(); ++p) {
      if (first.large && p == first.pos) continue;
      const double x = static_cast<double>(large[p]);
      const double wp = std::max(
          0.0, separable_ ? uf * lv_[p] + vf * lu_[p] : kernel_value(spec_, fs, x));
      if (target < acc + wp) return ParticleRef{large[p], p, true};
      acc += wp;
    }
    return last_candidate(store, &first);
  }

  // Rounding pushed a scan target past every partial sum. All kernels here
  // are strictly positive, so the topmost remaining particle is a fair clamp.
  ParticleRef last_candidate(const ParticleStore& store, const ParticleRef* exclude) const {
    const auto& large = store.large_sizes();
    for (std::size_t p = large.size(); p-- > 0;) {
      if (exclude && exclude->large && exclude->pos == p) continue;
      return ParticleRef{large[p], p, true};
    }
    const std::uint64_t hi = std::min<std::uint64_t>(threshold_, store.max_size());
    for (std::uint64_t s = hi; s >= 1; --s) {
      std::uint64_t m = store.bucket_count(s);
      if (exclude && !exclude->large && exclude->size == s) --m;
      if (m) return ParticleRef{s, 0, false};
    }
    throw SimulationError("rate table: no candidate particle remains");
  }

  KernelSpec spec_;
  bool separable_;
  std::uint64_t threshold_;

  // separable state
  std::vector<double> fu_, fv_, fself_;  // per-size factors, index 1..B
  std::vector<double> bu_, bv_, bd_;     // per-block sums of m*u, m*v, m*K(s,s)
  std::vector<double> lu_, lv_;          // per large particle
  double U_ = 0.0, V_ = 0.0, D_ = 0.0;

  // dense state
  std::vector<double> cb_, inv_;  // cbrt(s), 1/s for s <= B
  std::vector<double> brow_;      // inclusive row sums per bucket size
  std::vector<double> bw_;        // per-block stage-1 weights
  std::vector<double> lrow_;      // inclusive row sums per large particle
  double T_ = 0.0;
};

}  // namespace aggfrag
