#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "aggfrag/config.hpp"

using namespace aggfrag;

namespace {

std::string msg_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

const char* kMinimalAr = R"({
  "method": "ar",
  "kernel": "constant",
  "lambda": 0.1,
  "N0": 1000,
  "t_end": 2.0,
  "seeds": [3, 1, 2]
})";

}  // namespace

TEST_CASE("minimal monte carlo config and defaults") {
  const auto cfg = parse_config(kMinimalAr);
  CHECK(cfg.method == Method::Ar);
  CHECK(cfg.kernel.family == KernelFamily::Constant);
  CHECK(cfg.kernel.amplitude == 1.0);
  CHECK(cfg.lambda.constant());
  CHECK(cfg.lambda(5.0) == 0.1);
  CHECK(cfg.n_particles == 1000);
  CHECK(cfg.t_end == 2.0);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2, 3});  // sorted
  // defaults
  CHECK(cfg.initial == std::vector<std::pair<std::uint64_t, double>>{{1, 1.0}});
  CHECK(cfg.n0 == 1.0);
  CHECK(cfg.bucket_threshold == 1000);
  CHECK(cfg.cloning);
  CHECK(cfg.moment_orders == std::vector<int>{0, 1, 2});
  CHECK(cfg.output == "out");
  CHECK(cfg.workers == 1);
  REQUIRE(cfg.observe.size() == 101);
  CHECK(cfg.observe.front() == 0.0);
  CHECK(cfg.observe.back() == 2.0);
  CHECK(cfg.is_mc());
}

TEST_CASE("full fd config with schedule and polydisperse start") {
  const char* text = R"({
    "method": "fd",
    "kernel": {"family": "generalized", "a": 0.9, "amplitude": 2.0},
    "lambda": [[0.0, 0.01], [200.0, 0.005]],
    "initial": {"2": 0.1, "1": 0.25, "10": 0.05},
    "S": 2048,
    "dt": 0.002,
    "t_end": 400.0,
    "observe": {"from": 100.0, "to": 400.0, "points": 4},
    "snapshots": [400.0, 0.0],
    "moments": [2, 0, 2],
    "leak_tol": 0.001,
    "output": "runs/fig",
    "workers": 2
  })";
  const auto cfg = parse_config(text);
  CHECK(cfg.method == Method::Fd);
  CHECK_FALSE(cfg.is_mc());
  CHECK(cfg.kernel.family == KernelFamily::Generalized);
  CHECK(cfg.kernel.a == 0.9);
  CHECK(cfg.kernel.amplitude == 2.0);
  CHECK_FALSE(cfg.lambda.constant());
  CHECK(cfg.lambda(0.0) == 0.01);
  CHECK(cfg.lambda(100.0) == Catch::Approx(0.0075));
  CHECK(cfg.lambda(300.0) == 0.005);
  CHECK(cfg.initial ==
        std::vector<std::pair<std::uint64_t, double>>{{1, 0.25}, {2, 0.1}, {10, 0.05}});
  CHECK(cfg.n0 == Catch::Approx(0.4));
  CHECK(cfg.size_cutoff == 2048);
  CHECK(cfg.dt == 0.002);
  CHECK(cfg.leak_tol == 0.001);
  CHECK(cfg.observe == std::vector<double>{100.0, 200.0, 300.0, 400.0});
  CHECK(cfg.snapshots == std::vector<double>{0.0, 400.0});  // sorted
  CHECK(cfg.moment_orders == std::vector<int>{0, 2});       // deduped
  CHECK(cfg.output == "runs/fig");
  CHECK(cfg.workers == 2);
}

TEST_CASE("unknown and misplaced keys are rejected with an anchor") {
  CHECK(msg_of(R"({"method": "ar", "kernel": "constant", "lambda": 0, "N0": 10,
                   "t_end": 1, "seeds": [1], "n0": 2.0})")
            .find("n0: unknown key") != std::string::npos);
  // line anchor points at the offending key
  const auto m = msg_of("{\n  \"method\": \"ar\",\n  \"bogus\": 1\n}");
  CHECK(m.find("config:3") != std::string::npos);
  CHECK(m.find("bogus") != std::string::npos);

  CHECK(msg_of(R"({"method": "fd", "kernel": "constant", "lambda": 0, "S": 64,
                   "dt": 0.01, "t_end": 1, "N0": 100})")
            .find("N0: only valid for Monte Carlo") != std::string::npos);
  CHECK(msg_of(R"({"method": "ar", "kernel": "constant", "lambda": 0, "N0": 100,
                   "t_end": 1, "seeds": [1], "dt": 0.01})")
            .find("dt: only valid when method is fd") != std::string::npos);
  CHECK(msg_of(R"({"method": "ar", "kernel": "constant", "lambda": 0, "N0": 100,
                   "t_end": 1, "seeds": [1], "cloning": "yes"})")
            .find("cloning: expected a boolean") != std::string::npos);
}

TEST_CASE("field validation") {
  // method/kernel/lambda
  CHECK(msg_of(R"({"method": "mc", "kernel": "constant", "lambda": 0, "N0": 10,
                   "t_end": 1, "seeds": [1]})")
            .find("method") != std::string::npos);
  CHECK(msg_of(R"({"method": "ar", "kernel": "cubic", "lambda": 0, "N0": 10,
                   "t_end": 1, "seeds": [1]})")
            .find("unknown kernel family") != std::string::npos);
  CHECK(msg_of(R"({"method": "ar", "kernel": {"family": "generalized"}, "lambda": 0,
                   "N0": 10, "t_end": 1, "seeds": [1]})")
            .find("needs exponent") != std::string::npos);
  CHECK(msg_of(R"({"method": "ar", "kernel": {"family": "sum", "a": 1}, "lambda": 0,
                   "N0": 10, "t_end": 1, "seeds": [1]})")
            .find("only the generalized kernel") != std::string::npos);
  CHECK(msg_of(R"({"method": "ar", "kernel": "constant", "lambda": -0.1, "N0": 10,
                   "t_end": 1, "seeds": [1]})")
            .find("lambda: must be >= 0") != std::string::npos);

  // population and seeds
  CHECK(msg_of(R"({"method": "ar", "kernel": "constant", "lambda": 0, "N0": 1,
                   "t_end": 1, "seeds": [1]})")
            .find("N0: must be >= 2") != std::string::npos);
  CHECK(msg_of(R"({"method": "ar", "kernel": "constant", "lambda": 0, "N0": 10,
                   "t_end": 1, "seeds": [1, 1]})")
            .find("duplicate seed") != std::string::npos);
  CHECK(msg_of(R"({"method": "ar", "kernel": "constant", "lambda": 0, "N0": 10,
                   "t_end": 1, "seeds": []})")
            .find("seeds") != std::string::npos);

  // fd block
  CHECK(msg_of(R"({"method": "fd", "kernel": "constant", "lambda": 0, "S": 1,
                   "dt": 0.01, "t_end": 1})")
            .find("S: must be in") != std::string::npos);
  CHECK(msg_of(R"({"method": "fd", "kernel": "constant", "lambda": 0, "S": 64,
                   "dt": 0, "t_end": 1})")
            .find("dt: must be positive") != std::string::npos);

  // grids
  CHECK(msg_of(R"({"method": "ar", "kernel": "constant", "lambda": 0, "N0": 10,
                   "t_end": 1, "seeds": [1], "observe": [0.5, 0.5]})")
            .find("strictly increasing") != std::string::npos);
  CHECK(msg_of(R"({"method": "ar", "kernel": "constant", "lambda": 0, "N0": 10,
                   "t_end": 1, "seeds": [1], "observe": [0.5, 2.0]})")
            .find("observe") != std::string::npos);
  CHECK(msg_of(R"({"method": "ar", "kernel": "constant", "lambda": 0, "N0": 10,
                   "t_end": 1, "seeds": [1], "snapshots": [9]})")
            .find("snapshots") != std::string::npos);
  CHECK(msg_of(R"({"method": "ar", "kernel": "constant", "lambda": 0, "N0": 10,
                   "t_end": 1, "seeds": [1], "moments": [9]})")
            .find("moments: orders must be in [0, 8]") != std::string::npos);

  // initial distribution
  CHECK(msg_of(R"({"method": "ar", "kernel": "constant", "lambda": 0, "N0": 10,
                   "t_end": 1, "seeds": [1], "initial": {"0": 1.0}})")
            .find("initial") != std::string::npos);
  CHECK(msg_of(R"({"method": "ar", "kernel": "constant", "lambda": 0, "N0": 10,
                   "t_end": 1, "seeds": [1], "initial": {"1": -0.5}})")
            .find("densities must be >= 0") != std::string::npos);

  // malformed JSON still carries a line anchor
  CHECK(msg_of("{\n  \"method\": \"ar\",,\n}").find("config:") != std::string::npos);
}

TEST_CASE("lambda schedule breakpoints validate through the schedule type") {
  CHECK(msg_of(R"({"method": "ar", "kernel": "constant", "lambda": [[0, 0.01], [0, 0.02]],
                   "N0": 10, "t_end": 1, "seeds": [1]})")
            .find("lambda") != std::string::npos);
  CHECK(msg_of(R"({"method": "ar", "kernel": "constant", "lambda": [[0, 0.01], [10, -1]],
                   "N0": 10, "t_end": 1, "seeds": [1]})")
            .find("lambda") != std::string::npos);
  CHECK(msg_of(R"({"method": "ar", "kernel": "constant", "lambda": [[0, 0.01], [10]],
                   "N0": 10, "t_end": 1, "seeds": [1]})")
            .find("[t, value] pairs") != std::string::npos);
}

TEST_CASE("canonical echo is stable across key order and formatting") {
  const char* reordered = R"({
    "seeds": [2, 1, 3], "t_end": 2.0,
    "N0": 1000, "lambda": 0.1, "kernel": "constant", "method": "ar"
  })";
  const auto a = parse_config(kMinimalAr);
  const auto b = parse_config(reordered);
  CHECK(a.canonical == b.canonical);
  CHECK(a.hash == b.hash);
  CHECK(a.hash != 0);

  // any semantic change moves the hash
  const char* other = R"({
    "method": "ar", "kernel": "constant", "lambda": 0.1,
    "N0": 1001, "t_end": 2.0, "seeds": [3, 1, 2]
  })";
  CHECK(parse_config(other).hash != a.hash);
}

TEST_CASE("initial counts use largest-remainder rounding") {
  auto counts_for = [](std::uint64_t n0, const char* initial) {
    std::string text = R"({"method": "ar", "kernel": "constant", "lambda": 0,
      "t_end": 1, "seeds": [1], "N0": )";
    text += std::to_string(n0);
    text += ", \"initial\": ";
    text += initial;
    text += "}";
    return initial_counts(parse_config(text));
  };

  using Pairs = std::vector<std::pair<std::uint64_t, std::uint64_t>>;
  // exact split, no remainders
  CHECK(counts_for(10, R"({"1": 0.3, "2": 0.3, "3": 0.4})") ==
        Pairs{{1, 3}, {2, 3}, {3, 4}});
  // equal remainders: ties go to the smaller size
  CHECK(counts_for(10, R"({"1": 1.0, "2": 1.0, "3": 1.0})") ==
        Pairs{{1, 4}, {2, 3}, {3, 3}});
  // mixed remainders: largest first
  CHECK(counts_for(7, R"({"1": 0.5, "2": 0.25, "4": 0.25})") ==
        Pairs{{1, 3}, {2, 2}, {4, 2}});

  // the total is always exactly N0
  for (std::uint64_t n : {2ull, 17ull, 101ull, 999ull}) {
    std::uint64_t sum = 0;
    for (const auto& [size, cnt] :
         counts_for(n, R"({"1": 0.17, "3": 0.55, "7": 0.11, "9": 0.17})"))
      sum += cnt;
    CHECK(sum == n);
  }
}
