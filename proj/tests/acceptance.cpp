// Copyright 2026 The pixclust Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. argv[1], when given, is a scratch directory.

#include <algorithm>
#include <chrono>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "oracles.hpp"
#include "pixclust/cli.hpp"
#include "pixclust/clustering.hpp"
#include "pixclust/eval.hpp"
#include "pixclust/pca.hpp"
#include "pixclust/quality.hpp"
#include "pixclust/tensor_io.hpp"

using namespace pixclust;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

fs::path g_scratch;

Outcome silhouette_oracle() {
  std::mt19937_64 rng(2024);
  double worst = 0;
  double elapsed = 0;
  for (int d = 0; d < 50; ++d) {
    const int k = uniform_int(rng, 2, 5);
    const int n = uniform_int(rng, 2 * k, 500);
    const int c = uniform_int(rng, 1, 8);
    RowMatrix<double> x(n, c);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      labels[static_cast<std::size_t>(i)] = i < k ? i : uniform_int(rng, 0, k - 1);
      for (int j = 0; j < c; ++j) x(i, j) = 3.0 * labels[static_cast<std::size_t>(i)] * (j % 2 ? 1 : -1) +
                                             oracle::gaussian(rng) * (1 + d % 3);
    }
    oracle::Points p(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)].assign(x.row(i).data(), x.row(i).data() + c);

    const auto t0 = Clock::now();
    const auto got = silhouette_scores(x, std::span<const int>(labels));
    elapsed += seconds_since(t0);
    const auto want = oracle::silhouette(p, labels);
    for (std::size_t i = 0; i < want.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
  }
  std::ostringstream s;
  s << "max |diff| " << worst << ", " << elapsed << " s";
  return {worst <= 1e-6 && elapsed < 10.0, s.str()};
}

Outcome pca_invariants() {
  std::mt19937_64 rng(77);
  double ortho = 0, trace = 0, var = 0;
  for (int m = 0; m < 50; ++m) {
    const int n = uniform_int(rng, 20, 400);
    const int c = uniform_int(rng, 2, 8);
    RowMatrix<double> x(n, c);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < c; ++j) x(i, j) = oracle::gaussian(rng) * (j + 1) + 0.5 * (j ? x(i, j - 1) : 0.0) + m;
    }
    const auto model = fit_pca(x);
    const auto& v = model.eigenvectors;
    ortho = std::max(ortho, (v.transpose() * v - Eigen::MatrixXd::Identity(c, c)).cwiseAbs().maxCoeff());

    // Trace of the covariance by explicit loops.
    double tr = 0;
    for (int j = 0; j < c; ++j) {
      double mean = 0;
      for (int i = 0; i < n; ++i) mean += x(i, j);
      mean /= n;
      double ss = 0;
      for (int i = 0; i < n; ++i) ss += (x(i, j) - mean) * (x(i, j) - mean);
      tr += ss / (n - 1);
    }
    trace = std::max(trace, std::abs(model.eigenvalues.sum() - tr) / tr);

    const RowMatrix<double> scores = project(x, model, c);
    for (int j = 0; j < c; ++j) {
      const double mean = scores.col(j).mean();
      const double vj = (scores.col(j).array() - mean).square().sum() / (n - 1);
      const double lam = model.eigenvalues(j);
      var = std::max(var, std::abs(vj - lam) / std::max(lam, 1e-12 * model.eigenvalues(0)));
    }
  }
  std::ostringstream s;
  s << "orthonormality " << ortho << ", trace rel " << trace << ", variance rel " << var;
  return {ortho <= 1e-6 && trace <= 1e-6 && var <= 1e-4, s.str()};
}

Outcome select_k_rules() {
  bool ok = select_k(std::vector<double>{1.0, 0.5, 0.31, 0.29}, 0.3) == 3;
  std::mt19937_64 rng(5);
  int scale_failures = 0, monotone_failures = 0;
  for (int r = 0; r < 100; ++r) {
    std::vector<double> text(static_cast<std::size_t>(uniform_int(rng, 1, 12)));
    for (auto& e : text) e = std::exp(6.0 * oracle::uniform(rng) - 3.0);
    std::sort(text.rbegin(), text.rend());
    const Index base = select_k(text, 0.3);
    for (double c : {1e-3, 1.0, 1e3}) {
      std::vector<double> scaled = text;
      for (auto& e : scaled) e *= c;
      if (select_k(scaled, 0.3) != base) ++scale_failures;
    }
    Index prev = std::numeric_limits<Index>::max();
    for (double t = 0.0; t < 1.0; t += 0.01) {
      const Index k = select_k(text, t);
      if (k > prev) ++monotone_failures;
      prev = k;
    }
  }
  ok = ok && scale_failures == 0 && monotone_failures == 0;
  std::ostringstream s;
  s << "scale failures " << scale_failures << ", monotonicity failures " << monotone_failures;
  return {ok, s.str()};
}

Outcome blob_recovery() {
  const auto blobs = oracle::four_blobs(100);
  const ClusterLabels km = kmeans(blobs.x, 4, {42});
  const ClusterLabels ward = hierarchical(blobs.x, 4, {Linkage::Ward});
  const double ari_km = oracle::adjusted_rand_index(km.labels, blobs.labels);
  const double ari_ward = oracle::adjusted_rand_index(ward.labels, blobs.labels);
  bool monotone = true;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto run = kmeans(blobs.x, 4, {seed});
    for (std::size_t i = 1; i < run.inertia_history.size(); ++i) {
      monotone = monotone && run.inertia_history[i] <= run.inertia_history[i - 1];
    }
  }
  std::ostringstream s;
  s << "ARI kmeans " << ari_km << ", ARI ward " << ari_ward << ", inertia monotone " << monotone;
  return {ari_km == 1.0 && ari_ward == 1.0 && monotone, s.str()};
}

LabelMap map_2x2(std::initializer_list<std::uint8_t> v) {
  LabelMap m(2, 2);
  m.labels.assign(v);
  return m;
}

Outcome eval_oracle() {
  const EvalReport fixture = evaluate(map_2x2({0, 0, 0, 1}), map_2x2({0, 0, 1, 1}));
  bool ok = fixture.p_acc == 0.75 && fixture.m_iou == 7.0 / 12.0;
  std::mt19937_64 rng(99);
  int mismatches = 0;
  for (int r = 0; r < 100; ++r) {
    const LabelMap pred = oracle::random_label_map(8, 8, 4, rng);
    const LabelMap gt = oracle::random_label_map(8, 8, 4, rng);
    const auto want = oracle::brute_force_scores(pred, gt);
    const EvalReport c = evaluate(pred, gt, NMode::Clusters);
    const EvalReport g = evaluate(pred, gt, NMode::Gt);
    if (c.p_acc != want.p_acc || c.m_iou != want.m_iou_clusters || g.m_iou != want.m_iou_gt) ++mismatches;
  }
  std::ostringstream s;
  s << "fixture p_acc " << fixture.p_acc << " m_iou " << fixture.m_iou << ", random mismatches " << mismatches;
  return {ok && mismatches == 0, s.str()};
}

LabelMap relabel(const LabelMap& m, std::mt19937_64& rng) {
  std::vector<std::uint8_t> values(kMaxLabel + 1);
  std::iota(values.begin(), values.end(), std::uint8_t{0});
  std::shuffle(values.begin(), values.end(), rng);
  LabelMap out = m;
  for (auto& l : out.labels) l = values[l];
  return out;
}

Outcome permutation_invariance() {
  std::mt19937_64 rng(31);
  int mismatches = 0;
  for (int r = 0; r < 100; ++r) {
    const LabelMap pred = oracle::random_label_map(16, 16, 6, rng);
    const LabelMap gt = oracle::random_label_map(16, 16, 6, rng);
    const EvalReport base = evaluate(pred, gt);
    const EvalReport moved = evaluate(relabel(pred, rng), relabel(gt, rng));
    if (base.p_acc != moved.p_acc || base.m_iou != moved.m_iou || base.m_iou_gt != moved.m_iou_gt) ++mismatches;
  }
  return {mismatches == 0, "mismatches " + std::to_string(mismatches)};
}

int segment(const fs::path& tensor, const fs::path& out_dir) {
  std::ostringstream out, err;
  const int code = cli::run({"pixclust", "segment", "--recipe", "fr=" + tensor.string(), "--out", out_dir.string()},
                            out, err);
  if (code != 0) std::cerr << err.str();
  return code;
}

Outcome end_to_end() {
  const fs::path dir = g_scratch / "e2e";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_ftz(oracle::three_region_tensor(), dir / "regions.ftz");
  const auto t0 = Clock::now();
  const int code = segment(dir / "regions.ftz", dir / "out");
  const double elapsed = seconds_since(t0);
  if (code != 0) return {false, "segment exited " + std::to_string(code)};

  const auto report = nlohmann::json::parse(slurp(dir / "out" / "report.json"));
  const int k = report["winner"]["k"].get<int>();
  const double sr = report["winner"]["sr"].get<double>();
  const double p_acc = evaluate(read_label_png(dir / "out" / "labelmap.png"), oracle::three_region_truth()).p_acc;
  std::ostringstream s;
  s << "K " << k << ", pAcc " << p_acc << ", SR " << sr << ", " << elapsed << " s";
  return {k == 3 && p_acc >= 0.99 && sr >= 0.95 && elapsed < 5.0, s.str()};
}

Outcome determinism() {
  const fs::path dir = g_scratch / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_ftz(oracle::three_region_tensor(), dir / "regions.ftz");
  if (segment(dir / "regions.ftz", dir / "a") != 0 || segment(dir / "regions.ftz", dir / "b") != 0) {
    return {false, "segment failed"};
  }
  const bool labels = slurp(dir / "a" / "labelmap.png") == slurp(dir / "b" / "labelmap.png");
  const bool report = slurp(dir / "a" / "report.json") == slurp(dir / "b" / "report.json");
  std::ostringstream s;
  s << "labelmap identical " << labels << ", report identical " << report;
  return {labels && report, s.str()};
}

Outcome ftz_round_trip() {
  const fs::path dir = g_scratch / "ftz";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::mt19937_64 rng(123);
  const float specials[] = {0.0f, -0.0f, std::numeric_limits<float>::denorm_min(), std::numeric_limits<float>::max(),
                            std::numeric_limits<float>::lowest(), std::numeric_limits<float>::min()};
  int failures = 0;
  for (int r = 0; r < 100; ++r) {
    FeatureTensor t(uniform_int(rng, 1, 48), uniform_int(rng, 1, 48), uniform_int(rng, 1, 16));
    for (Index i = 0; i < t.data.size(); ++i) {
      std::uint32_t bits = static_cast<std::uint32_t>(rng());
      float v;
      std::memcpy(&v, &bits, sizeof v);
      if (!std::isfinite(v)) v = specials[bits % 6];
      t.data.data()[i] = v;
    }
    if (r % 2) t.meta["layer"] = "block" + std::to_string(r);
    const fs::path path = dir / ("t" + std::to_string(r) + ".ftz");
    write_ftz(t, path);
    const FeatureTensor back = read_ftz(path);
    const bool same = back.height == t.height && back.width == t.width && back.channels == t.channels &&
                      back.meta == t.meta &&
                      std::memcmp(back.data.data(), t.data.data(), sizeof(float) * t.data.size()) == 0 &&
                      encode_ftz(back) == encode_ftz(t);
    if (!same) ++failures;
  }
  return {failures == 0, "failures " + std::to_string(failures) + " / 100"};
}

}  // namespace

int main(int argc, char** argv) {
  g_scratch = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "pixclust_acceptance";
  fs::create_directories(g_scratch);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"silhouette matches brute force", silhouette_oracle},
      {"pca invariants", pca_invariants},
      {"select_k exactness, scale invariance, monotonicity", select_k_rules},
      {"planted blob recovery", blob_recovery},
      {"eval matches brute-force scorer", eval_oracle},
      {"eval permutation invariance", permutation_invariance},
      {"end-to-end synthetic segmentation", end_to_end},
      {"segment determinism", determinism},
      {"ftz round trip", ftz_round_trip},
  };

  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << " (" << o.detail << ")" << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " passed\n";
  return failed == 0 ? 0 : 1;
}
