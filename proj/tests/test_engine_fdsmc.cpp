#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "aggfrag/engine_ar.hpp"
#include "aggfrag/engine_fdsmc.hpp"

using namespace aggfrag;

namespace {

ParticleStore monodisperse(std::uint64_t n, std::uint64_t threshold = 1000,
                           double n0 = 1.0) {
  return ParticleStore({{1, n}}, threshold, n0);
}

// T = sum_i S_i = sum over ordered distinct pairs of K
double brute_total_rate(const ParticleStore& store, const KernelSpec& spec) {
  std::vector<std::uint64_t> sizes;
  store.for_each_class([&](std::uint64_t s, std::uint64_t c) {
    for (std::uint64_t k = 0; k < c; ++k) sizes.push_back(s);
  });
  double total = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i)
    for (std::size_t j = i + 1; j < sizes.size(); ++j)
      total += 2.0 * evaluate(spec, sizes[i], sizes[j]);
  return total;
}

}  // namespace

TEST_CASE("time shift matches 2V / (T (1+lambda))") {
  // monodisperse constant kernel: T = N(N-1), V = N, so tau = 2/((N-1)(1+lam))
  {
    FdsmcEngine eng(KernelSpec::constant(1.0), LambdaSchedule(0.0), monodisperse(1000), 7);
    CHECK(eng.time_shift() == Catch::Approx(2.0 / 999.0).epsilon(1e-12));
  }
  {
    FdsmcEngine eng(KernelSpec::constant(1.0), LambdaSchedule(0.1), monodisperse(1000), 7);
    CHECK(eng.time_shift() == Catch::Approx(2.0 / (999.0 * 1.1)).epsilon(1e-12));
  }
  {
    ParticleStore store({{2, 10}, {5, 4}, {30, 2}}, 16, 1.0);
    const double brute = brute_total_rate(store, KernelSpec::ballistic(1.0));
    const double volume = store.effective_volume();
    FdsmcEngine eng(KernelSpec::ballistic(1.0), LambdaSchedule(0.3), std::move(store), 7);
    CHECK(eng.time_shift() == Catch::Approx(2.0 * volume / (brute * 1.3)).epsilon(1e-10));
  }
}

TEST_CASE("incremental rate totals stay glued to brute force") {
  for (const auto& spec : {KernelSpec::generalized(0.95, 1.0), KernelSpec::ballistic(1.0)}) {
    ParticleStore init({{1, 400}}, 64, 1.0);
    EngineOptions opts;
    opts.rebuild_every = 1u << 30;  // never rebuild inside the window
    FdsmcEngine eng(spec, LambdaSchedule(0.2), std::move(init), 31, 0, opts);
    for (int ev = 0; ev < 1000 && !eng.extinct() && eng.store().count() >= 2; ++ev) {
      eng.step();
      if (ev % 100 == 99) {
        const double brute = brute_total_rate(eng.store(), spec);
        REQUIRE(eng.table().total_rate() == Catch::Approx(brute).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("pair selection follows the exact collision law") {
  // P(unordered pair) = 2 K(p,q) / T for distinct particles
  for (const auto& spec : {KernelSpec::generalized(0.9, 1.0), KernelSpec::ballistic(1.0)}) {
    const std::uint64_t B = 16;
    ParticleStore store({{1, 5}, {3, 4}, {B + 4, 2}, {B + 30, 1}}, B, 1.0);
    RateTable table(spec, store);
    Rng rng(777);
    std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t> counts;
    const int draws = 200000;
    for (int i = 0; i < draws; ++i) {
      auto [a, b] = table.sample_pair(store, rng);
      std::uint64_t x = a.size, y = b.size;
      if (x > y) std::swap(x, y);
      ++counts[{x, y}];
    }
    std::vector<std::uint64_t> sizes;
    store.for_each_class([&](std::uint64_t s, std::uint64_t c) {
      for (std::uint64_t k = 0; k < c; ++k) sizes.push_back(s);
    });
    std::map<std::pair<std::uint64_t, std::uint64_t>, double> expect;
    double total = 0.0;
    for (std::size_t i = 0; i < sizes.size(); ++i)
      for (std::size_t j = i + 1; j < sizes.size(); ++j) {
        std::uint64_t x = sizes[i], y = sizes[j];
        if (x > y) std::swap(x, y);
        const double k = evaluate(spec, x, y);
        expect[{x, y}] += k;
        total += k;
      }
    double chi2 = 0.0;
    int cells = 0;
    for (const auto& [key, weight] : expect) {
      const double e = draws * weight / total;
      const double got = counts.count(key) ? counts.at(key) : 0.0;
      chi2 += (got - e) * (got - e) / e;
      ++cells;
    }
    // the lone size-46 particle cannot pair with itself: 9 cells, dof 8
    REQUIRE(cells == 9);
    CHECK(chi2 < 26.13);  // 1e-3 critical value, dof 8
  }
}

TEST_CASE("shatter branch frequency matches lambda/(1+lambda)") {
  const double lam = 0.5;
  FdsmcEngine eng(KernelSpec::constant(1.0), LambdaSchedule(lam), monodisperse(1000000), 43);
  const int events = 30000;
  for (int i = 0; i < events; ++i) eng.step();
  const double p = lam / (1.0 + lam);
  const double se = std::sqrt(p * (1 - p) / events);
  CHECK(static_cast<double>(eng.stats().shatterings) / events ==
        Catch::Approx(p).margin(4.0 * se));
  CHECK(eng.stats().trials == eng.stats().acceptances);  // exact-rate: no rejections
}

TEST_CASE("pure aggregation tracks the exact M0") {
  FdsmcEngine eng(KernelSpec::constant(1.0), LambdaSchedule(0.0), monodisperse(100000), 5);
  eng.advance_until(1.0);
  const auto d = eng.store().size_distribution(1.0);
  double m0 = 0.0;
  for (const double c : d.concentrations) m0 += c;
  CHECK(m0 == Catch::Approx(2.0 / 3.0).epsilon(0.02));
}

TEST_CASE("rebuild cadence leaves the total consistent") {
  ParticleStore init({{1, 2000}}, 32, 1.0);
  EngineOptions opts;
  opts.rebuild_every = 50;
  FdsmcEngine eng(KernelSpec::generalized(0.95, 1.0), LambdaSchedule(0.1), std::move(init),
                  61, 0, opts);
  for (int i = 0; i < 500; ++i) eng.step();
  const double brute = brute_total_rate(eng.store(), KernelSpec::generalized(0.95, 1.0));
  CHECK(eng.table().total_rate() == Catch::Approx(brute).epsilon(1e-9));
}

TEST_CASE("two particles without cloning leave a single survivor") {
  ParticleStore store({{3, 2}}, 10, 1.0);
  EngineOptions opts;
  opts.cloning = false;
  FdsmcEngine eng(KernelSpec::sum(1.0), LambdaSchedule(0.0), std::move(store), 13, 0, opts);
  CHECK_FALSE(eng.advance_until(1e9));
  CHECK(eng.extinct());
  CHECK(eng.stats().acceptances == 1);
  CHECK(eng.store().count() == 1);
  CHECK(eng.store().max_size() == 6);
  CHECK(eng.events().back().kind == EventKind::Extinction);
}

TEST_CASE("both engines agree on the shattering steady state") {
  // constant kernel with lambda = 0.2: independent 10-seed ensembles of both
  // engines must agree on M0(t=1) within 3 pooled standard errors
  auto run_m0 = [](bool use_ar, std::uint64_t seed) {
    ParticleStore store = monodisperse(20000);
    double m0 = 0.0;
    auto collect = [&](const auto& eng) {
      const auto d = eng.store().size_distribution(1.0);
      double acc = 0.0;
      for (const double c : d.concentrations) acc += c;
      return acc;
    };
    if (use_ar) {
      ArEngine eng(KernelSpec::constant(1.0), LambdaSchedule(0.2), std::move(store), seed);
      eng.advance_until(1.0);
      m0 = collect(eng);
    } else {
      FdsmcEngine eng(KernelSpec::constant(1.0), LambdaSchedule(0.2), std::move(store), seed);
      eng.advance_until(1.0);
      m0 = collect(eng);
    }
    return m0;
  };
  std::vector<double> ar, fd;
  for (std::uint64_t s = 1; s <= 10; ++s) {
    ar.push_back(run_m0(true, s));
    fd.push_back(run_m0(false, s + 100));
  }
  auto mean_se = [](const std::vector<double>& v) {
    double m = 0.0;
    for (const double x : v) m += x;
    m /= v.size();
    double var = 0.0;
    for (const double x : v) var += (x - m) * (x - m);
    var /= (v.size() - 1.0);
    return std::pair<double, double>(m, std::sqrt(var / v.size()));
  };
  const auto [ma, sa] = mean_se(ar);
  const auto [mf, sf] = mean_se(fd);
  const double pooled = std::sqrt(sa * sa + sf * sf);
  CHECK(std::fabs(ma - mf) <= 3.0 * pooled);
}
