// Particle population with the two-level layout: sizes up to a threshold B
// live in a count-per-size bucket array, anything larger is an explicit entry
// in a dynamic list. Uniform pair sampling over the buckets goes through
// per-block count sums (blocks of 64 sizes) so a draw costs O(B/64 + 64)
// instead of O(B); list entries are addressed directly by ordinal.
//
// ParticleRef values are invalidated by any mutation of the store. The
// engines sample a pair and consume it before touching anything else.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "aggfrag/errors.hpp"
#include "aggfrag/rng.hpp"
#include "aggfrag/size_distribution.hpp"

namespace aggfrag {

struct ParticleRef {
  std::uint64_t size = 0;
  std::uint64_t pos = 0;  // index into the large list; unused for bucket refs
  bool large = false;
};

class ParticleStore {
 public:
  static constexpr std::uint64_t kBlock = 64;

  // initial: (size, count) pairs; repeated sizes accumulate.
  // n0 is the physical number density represented by the initial population.
  ParticleStore(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& initial,
                std::uint64_t bucket_threshold, double n0)
      : threshold_(bucket_threshold), initial_density_(n0) {
    if (threshold_ < 1) throw ConfigError("bucket_threshold must be >= 1");
    if (!(n0 > 0.0) || !std::isfinite(n0))
      throw ConfigError("initial density must be positive and finite");
    bucket_counts_.assign(threshold_ + 1, 0);
    block_counts_.assign((threshold_ + kBlock - 1) / kBlock, 0);
    for (const auto& [size, cnt] : initial) {
      if (size == 0) throw ConfigError("particle size 0 in initial population");
      if (cnt == 0) continue;
      insert(size, cnt);
    }
    if (count_ == 0) throw ConfigError("initial population is empty");
    initial_count_ = count_;
  }

  void insert(std::uint64_t size, std::uint64_t count = 1) {
    AGGFRAG_CHECK(size >= 1, "insert: size must be >= 1");
    if (size <= threshold_) {
      bucket_counts_[size] += count;
      block_counts_[block_of(size)] += count;
      bucket_particles_ += count;
    } else {
      large_.insert(large_.end(), count, size);
    }
    count_ += count;
    mass_ += size * count;
    if (size > max_size_) max_size_ = size;
  }

  std::uint64_t remove(const ParticleRef& ref) {
    if (ref.large) {
      AGGFRAG_CHECK(ref.pos < large_.size(), "remove: stale large reference");
      const std::uint64_t size = large_[ref.pos];
      large_[ref.pos] = large_.back();
      large_.pop_back();
      finish_removal(size);
      return size;
    }
    AGGFRAG_CHECK(ref.size >= 1 && ref.size <= threshold_ && bucket_counts_[ref.size] > 0,
                  "remove: stale bucket reference");
    --bucket_counts_[ref.size];
    --block_counts_[block_of(ref.size)];
    --bucket_particles_;
    finish_removal(ref.size);
    return ref.size;
  }

  // Remove both members of a sampled pair; handles the index shift when both
  // live in the large list.
  void remove_pair(const ParticleRef& a, const ParticleRef& b) {
    AGGFRAG_CHECK(!(a.large && b.large && a.pos == b.pos), "remove_pair: same particle twice");
    if (a.large && b.large && a.pos < b.pos) {
      remove(b);
      remove(a);
    } else {
      remove(a);
      remove(b);
    }
  }

  // Uniform unordered pair of distinct particles. Consumes exactly two
  // integer draws: the ordinal of the first particle among N, then the
  // ordinal of the second among the remaining N-1.
  std::pair<ParticleRef, ParticleRef> sample_uniform_pair(Rng& rng) const {
    AGGFRAG_CHECK(count_ >= 2, "sample_uniform_pair: need at least two particles");
    const ParticleRef first = ref_from_ordinal(rng.uniform_below(count_));
    const std::uint64_t w = rng.uniform_below(count_ - 1);

    const std::uint64_t bucket_total =
        bucket_particles_ - (first.large ? 0 : 1);
    ParticleRef second;
    if (w < bucket_total) {
      second.size = bucket_size_from_ordinal(w, first.large ? 0 : first.size);
      second.large = false;
    } else {
      std::uint64_t q = w - bucket_total;
      if (first.large && q >= first.pos) ++q;
      AGGFRAG_CHECK(q < large_.size(), "sample_uniform_pair: ordinal out of range");
      second = ParticleRef{large_[q], q, true};
    }
    return {first, second};
  }

  // Doubles every particle count and the effective volume with it.
  void duplicate_all() {
    if (mass_ > (1ull << 62))
      throw SimulationError("duplicate_all: total mass would overflow");
    for (auto& c : bucket_counts_) c *= 2;
    for (auto& c : block_counts_) c *= 2;
    const std::size_t n = large_.size();
    large_.reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i) large_.push_back(large_[i]);
    count_ *= 2;
    bucket_particles_ *= 2;
    mass_ *= 2;
    ++doublings_;
  }

  std::uint64_t count() const { return count_; }
  std::uint64_t mass() const { return mass_; }
  std::uint64_t max_size() const { return max_size_; }
  std::uint64_t threshold() const { return threshold_; }
  std::uint32_t doublings() const { return doublings_; }
  std::uint64_t initial_count() const { return initial_count_; }
  double initial_density() const { return initial_density_; }
  std::uint64_t bucket_particles() const { return bucket_particles_; }

  // Simulated particles currently stand for V = N0 * 2^d / n0 of physical
  // volume; number density is N / V.
  double effective_volume() const {
    return std::ldexp(static_cast<double>(initial_count_), doublings_) / initial_density_;
  }
  double density() const { return static_cast<double>(count_) / effective_volume(); }

  std::uint64_t bucket_count(std::uint64_t size) const {
    AGGFRAG_CHECK(size >= 1 && size <= threshold_, "bucket_count: size out of range");
    return bucket_counts_[size];
  }
  const std::vector<std::uint64_t>& large_sizes() const { return large_; }

  // Visit occupied classes: buckets ascending with multiplicities, then the
  // large list entry by entry (count 1 each, sizes may repeat).
  template <class F>
  void for_each_class(F&& f) const {
    const std::uint64_t hi = std::min<std::uint64_t>(threshold_, max_size_);
    for (std::uint64_t s = 1; s <= hi; ++s)
      if (bucket_counts_[s]) f(s, bucket_counts_[s]);
    for (const std::uint64_t s : large_) f(s, std::uint64_t{1});
  }

  SizeDistribution size_distribution(double time) const {
    SizeDistribution d;
    d.time = time;
    const double scale = 1.0 / effective_volume();
    const std::uint64_t hi = std::min<std::uint64_t>(threshold_, max_size_);
    for (std::uint64_t s = 1; s <= hi; ++s)
      if (bucket_counts_[s]) {
        d.sizes.push_back(s);
        d.concentrations.push_back(static_cast<double>(bucket_counts_[s]) * scale);
      }
    if (!large_.empty()) {
      std::vector<std::uint64_t> sorted = large_;
      std::sort(sorted.begin(), sorted.end());
      for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        d.sizes.push_back(sorted[i]);
        d.concentrations.push_back(static_cast<double>(j - i) * scale);
        i = j;
      }
    }
    return d;
  }

 private:
  std::uint64_t block_of(std::uint64_t size) const { return (size - 1) / kBlock; }

  void finish_removal(std::uint64_t size) {
    --count_;
    mass_ -= size;
    if (size == max_size_ && count_ > 0) refresh_max();
    if (count_ == 0) max_size_ = 0;
  }

  void refresh_max() {
    std::uint64_t m = 0;
    for (const std::uint64_t s : large_) m = std::max(m, s);
    if (m == 0) {
      for (std::uint64_t b = block_counts_.size(); b-- > 0;) {
        if (!block_counts_[b]) continue;
        const std::uint64_t lo = b * kBlock + 1;
        const std::uint64_t hi = std::min(threshold_, (b + 1) * kBlock);
        for (std::uint64_t s = hi; s >= lo; --s)
          if (bucket_counts_[s]) { m = s; break; }
        break;
      }
    }
    max_size_ = m;
  }

  ParticleRef ref_from_ordinal(std::uint64_t w) const {
    if (w < bucket_particles_)
      return ParticleRef{bucket_size_from_ordinal(w, 0), 0, false};
    const std::uint64_t pos = w - bucket_particles_;
    AGGFRAG_CHECK(pos < large_.size(), "ref_from_ordinal: ordinal out of range");
    return ParticleRef{large_[pos], pos, true};
  }

  // Ordinal -> size over the bucket array, with one particle of skip_size
  // (0 = none) left out. Block sums first, then the 64 sizes inside.
  std::uint64_t bucket_size_from_ordinal(std::uint64_t w, std::uint64_t skip_size) const {
    const std::uint64_t skip_block = skip_size ? block_of(skip_size) : block_counts_.size();
    std::uint64_t acc = 0;
    for (std::uint64_t b = 0; b < block_counts_.size(); ++b) {
      std::uint64_t bw = block_counts_[b];
      if (b == skip_block) --bw;
      if (w < acc + bw) {
        const std::uint64_t lo = b * kBlock + 1;
        const std::uint64_t hi = std::min(threshold_, (b + 1) * kBlock);
        for (std::uint64_t s = lo; s <= hi; ++s) {
          std::uint64_t c = bucket_counts_[s];
          if (s == skip_size) --c;
          if (w < acc + c) return s;
          acc += c;
        }
        AGGFRAG_CHECK(false, "bucket_size_from_ordinal: block scan overran");
      }
      acc += bw;
    }
    AGGFRAG_CHECK(false, "bucket_size_from_ordinal: ordinal out of range");
    return 0;
  }

  std::uint64_t threshold_;
  double initial_density_;
  std::vector<std::uint64_t> bucket_counts_;  // index = size, [0] unused
  std::vector<std::uint64_t> block_counts_;   // sums of 64 consecutive sizes
  std::vector<std::uint64_t> large_;          // sizes > threshold_, one entry per particle
  std::uint64_t count_ = 0;
  std::uint64_t bucket_particles_ = 0;
  std::uint64_t mass_ = 0;
  std::uint64_t max_size_ = 0;
  std::uint64_t initial_count_ = 0;
  std::uint32_t doublings_ = 0;
};

}  // namespace aggfrag
