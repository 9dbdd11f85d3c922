#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "parallel.hpp"
#include "roadkit/cli.hpp"
#include "roadkit/ga_kernel.hpp"
#include "roadkit/labelgen.hpp"
#include "roadkit/losses.hpp"
#include "roadkit/metrics.hpp"
#include "roadkit/synth.hpp"

namespace roadkit::cli {

namespace {

using nlohmann::ordered_json;

constexpr double kGradientTolerance = 1e-4;
constexpr double kDistanceTolerance = 1e-6;
constexpr double kFiniteDiffStep = 1e-4;

// Every instance owns an independent stream so results do not depend on
// which worker ran it.
std::mt19937_64 instance_rng(std::uint64_t seed, std::uint64_t suite, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(suite), static_cast<std::uint32_t>(index)};
  return std::mt19937_64(seq);
}

ordered_json entry(const char* name, std::size_t instances, const std::vector<double>& errors, double tolerance) {
  double worst = 0.0;
  for (double e : errors) worst = std::max(worst, e);
  ordered_json j;
  j["name"] = name;
  j["instances"] = instances;
  j["max_error"] = worst;
  j["tolerance"] = tolerance;
  j["pass"] = tolerance > 0.0 ? worst < tolerance : worst == 0.0;  // zero tolerance: exact
  return j;
}

std::vector<double> concat(std::initializer_list<const std::vector<double>*> parts) {
  std::vector<double> out;
  for (const auto* p : parts) out.insert(out.end(), p->begin(), p->end());
  return out;
}

struct LossInstance {
  loss::ProbMap pred;
  loss::ProbMap gt;
};

LossInstance random_loss_instance(std::mt19937_64& rng) {
  constexpr int C = 3, W = 6, H = 5;
  std::uniform_int_distribution<int> label(0, C - 1);
  std::uniform_real_distribution<double> prob(0.05, 0.95);
  std::vector<int> labels(W * H);
  for (int& l : labels) l = label(rng);
  LossInstance inst{loss::ProbMap(C, W, H), loss::one_hot(labels, C, W, H)};
  for (double& v : inst.pred.data()) v = prob(rng);
  return inst;
}

double soft_iou_error(std::uint64_t seed, std::size_t i) {
  auto rng = instance_rng(seed, 1, i);
  const auto inst = random_loss_instance(rng);
  const auto analytic = loss::soft_iou_loss(inst.pred, inst.gt).gradient;
  loss::ProbMap probe = inst.pred;
  const auto numeric = loss::finite_diff_gradient(
      [&](std::span<const double> x) {
        std::copy(x.begin(), x.end(), probe.data().begin());
        return loss::soft_iou_loss(probe, inst.gt).value;
      },
      inst.pred.data(), kFiniteDiffStep);
  return loss::max_relative_error(analytic, numeric);
}

double balanced_ce_error(std::uint64_t seed, std::size_t i) {
  auto rng = instance_rng(seed, 2, i);
  const auto inst = random_loss_instance(rng);
  const auto freqs = loss::class_frequencies(inst.gt);
  const auto w = loss::inverse_boundary_weights(freqs);
  const auto analytic = loss::balanced_ce_loss(inst.pred, inst.gt, w).gradient;
  loss::ProbMap probe = inst.pred;
  const auto numeric = loss::finite_diff_gradient(
      [&](std::span<const double> x) {
        std::copy(x.begin(), x.end(), probe.data().begin());
        return loss::balanced_ce_loss(probe, inst.gt, w).value;
      },
      inst.pred.data(), kFiniteDiffStep);
  return loss::max_relative_error(analytic, numeric);
}

ga::FeatureMap random_map(std::mt19937_64& rng, int c, int h, int w) {
  std::normal_distribution<double> n(0.0, 1.0);
  ga::FeatureMap m(c, h, w);
  for (double& v : m.data()) v = n(rng);
  return m;
}

double dot(const ga::FeatureMap& a, const ga::FeatureMap& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

// Flat parameter vector layout shared by pack/unpack below.
std::vector<double> pack(const ga::FeatureMap& v, const ga::GaParams& p, const ga::ResidualBranchParams* b) {
  auto x = concat({&v.data(), &p.w1, &p.b1, &p.w2, &p.b2});
  if (b) {
    const auto rest = concat({&b->conv1.weight, &b->conv1.bias, &b->conv2.weight, &b->conv2.bias});
    x.insert(x.end(), rest.begin(), rest.end());
  }
  return x;
}

void unpack(std::span<const double> x, ga::FeatureMap& v, ga::GaParams& p, ga::ResidualBranchParams* b) {
  auto it = x.begin();
  auto fill = [&](std::vector<double>& dst) {
    std::copy(it, it + static_cast<std::ptrdiff_t>(dst.size()), dst.begin());
    it += static_cast<std::ptrdiff_t>(dst.size());
  };
  fill(v.data());
  fill(p.w1);
  fill(p.b1);
  fill(p.w2);
  fill(p.b2);
  if (b) {
    fill(b->conv1.weight);
    fill(b->conv1.bias);
    fill(b->conv2.weight);
    fill(b->conv2.bias);
  }
}

// Smallest |input| over the ReLUs of the channel MLP.
double mlp_kink_margin(const ga::FeatureMap& v, const ga::GaParams& p) {
  double margin = std::numeric_limits<double>::infinity();
  for (int j = 0; j < p.hidden(); ++j) {
    double z = p.b1[j];
    for (int c = 0; c < v.channels(); ++c) {
      double pooled = 0.0;
      for (int k = 0; k < v.plane(); ++k) pooled += v.data()[static_cast<std::size_t>(c) * v.plane() + k];
      z += p.w1[static_cast<std::size_t>(j) * v.channels() + c] * pooled / v.plane();
    }
    margin = std::min(margin, std::abs(z));
  }
  return margin;
}

double min_abs(const ga::FeatureMap& m) {
  double out = std::numeric_limits<double>::infinity();
  for (double x : m.data()) out = std::min(out, std::abs(x));
  return out;
}

double kink_margin(const ga::FeatureMap& v, const ga::GaParams& p, const ga::ResidualBranchParams* b) {
  if (!b) return mlp_kink_margin(v, p);
  const ga::FeatureMap z1 = ga::conv3x3(v, b->conv1);
  ga::FeatureMap h = z1;
  for (double& x : h.data()) x = std::max(0.0, x);
  const ga::FeatureMap u = ga::conv3x3(h, b->conv2);
  ga::FeatureMap z2 = ga::ga_module(u, p);
  for (std::size_t k = 0; k < z2.data().size(); ++k) z2.data()[k] += v.data()[k];
  return std::min({min_abs(z1), min_abs(z2), mlp_kink_margin(u, p)});
}

// ReLU is not differentiable at 0; instances with a pre-activation closer
// than this to a kink are redrawn so the central difference stays on one side.
constexpr double kKinkMargin = 1e-3;

double ga_error(std::uint64_t seed, std::size_t i, bool resblock) {
  auto rng = instance_rng(seed, resblock ? 4 : 3, i);
  constexpr int C = 4, H = 6, W = 6;
  ga::FeatureMap v;
  ga::GaParams p;
  ga::ResidualBranchParams branch;
  do {
    v = random_map(rng, C, H, W);
    p = ga::GaParams::random(C, 2, rng, 0.5);
    branch = ga::ResidualBranchParams::random(C, rng, 0.3);
  } while (kink_margin(v, p, resblock ? &branch : nullptr) < kKinkMargin);
  const auto dy = random_map(rng, C, H, W);

  std::vector<double> analytic;
  if (resblock) {
    const auto g = ga::ga_resblock_backward(v, p, branch, dy);
    analytic = concat({&g.dv.data(), &g.dga.w1, &g.dga.b1, &g.dga.w2, &g.dga.b2, &g.dconv1.weight, &g.dconv1.bias,
                       &g.dconv2.weight, &g.dconv2.bias});
  } else {
    const auto g = ga::ga_backward(v, p, dy);
    analytic = concat({&g.dv.data(), &g.dparams.w1, &g.dparams.b1, &g.dparams.w2, &g.dparams.b2});
  }

  ga::FeatureMap pv = v;
  ga::GaParams pp = p;
  ga::ResidualBranchParams pb = branch;
  const auto x = pack(v, p, resblock ? &branch : nullptr);
  const auto numeric = loss::finite_diff_gradient(
      [&](std::span<const double> probe) {
        unpack(probe, pv, pp, resblock ? &pb : nullptr);
        return dot(resblock ? ga::ga_resblock(pv, pp, pb) : ga::ga_module(pv, pp), dy);
      },
      x, kFiniteDiffStep);
  return loss::max_relative_error(analytic, numeric);
}

double distance_oracle_error(std::uint64_t seed, std::size_t i) {
  auto rng = instance_rng(seed, 5, i);
  constexpr int N = 32;
  std::uniform_real_distribution<double> density(0.0, 0.3);
  const RasterMask m = random_mask(rng, N, N, density(rng));
  const ScalarField d = distance_map(m);
  double worst = 0.0;
  for (int y = 0; y < N; ++y) {
    for (int x = 0; x < N; ++x) {
      double best = std::numeric_limits<double>::infinity();
      for (int qy = 0; qy < N; ++qy)
        for (int qx = 0; qx < N; ++qx)
          if (m(qx, qy)) best = std::min(best, std::hypot(double(qx - x), double(qy - y)));
      if (std::isinf(best) && std::isinf(d(x, y))) continue;
      const double err = std::abs(best - d(x, y));
      worst = std::max(worst, std::isnan(err) ? std::numeric_limits<double>::infinity() : err);
    }
  }
  return worst;
}

double apls_identity_error(std::uint64_t seed, std::size_t i) {
  auto rng = instance_rng(seed, 6, i);
  const RoadGraph g = random_road_graph(rng);
  return std::abs(1.0 - apls(g, g, AplsParams{}));
}

std::vector<double> run_suite(std::size_t n, unsigned threads, double (*fn)(std::uint64_t, std::size_t),
                              std::uint64_t seed) {
  return parallel_map<double>(n, threads, [&](std::size_t i) { return fn(seed, i); });
}

bool all_pass(const ordered_json& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const ordered_json& c) { return c["pass"].get<bool>(); });
}

}  // namespace

ordered_json loss_check_report(std::uint64_t seed, int instances, unsigned threads) {
  const std::size_t n = instances > 0 ? static_cast<std::size_t>(instances) : 100;
  ordered_json checks = ordered_json::array();
  checks.push_back(entry("soft_iou_gradient", n, run_suite(n, threads, soft_iou_error, seed), kGradientTolerance));
  checks.push_back(entry("balanced_ce_gradient", n, run_suite(n, threads, balanced_ce_error, seed), kGradientTolerance));
  ordered_json report;
  report["seed"] = seed;
  report["checks"] = checks;
  report["pass"] = all_pass(checks);
  return report;
}

ordered_json full_check_report(std::uint64_t seed, unsigned threads) {
  ordered_json checks = ordered_json::array();
  checks.push_back(entry("soft_iou_gradient", 100, run_suite(100, threads, soft_iou_error, seed), kGradientTolerance));
  checks.push_back(
      entry("balanced_ce_gradient", 100, run_suite(100, threads, balanced_ce_error, seed), kGradientTolerance));
  checks.push_back(entry("ga_module_gradient", 20,
                         parallel_map<double>(20, threads, [&](std::size_t i) { return ga_error(seed, i, false); }),
                         kGradientTolerance));
  checks.push_back(entry("ga_resblock_gradient", 20,
                         parallel_map<double>(20, threads, [&](std::size_t i) { return ga_error(seed, i, true); }),
                         kGradientTolerance));
  checks.push_back(
      entry("distance_map_oracle", 50, run_suite(50, threads, distance_oracle_error, seed), kDistanceTolerance));
  checks.push_back(entry("apls_identity", 20, run_suite(20, threads, apls_identity_error, seed), 0.0));
  ordered_json report;
  report["seed"] = seed;
  report["checks"] = checks;
  report["pass"] = all_pass(checks);
  return report;
}

}  // namespace roadkit::cli
