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

#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "pixclust/eval.hpp"
#include "pixclust/pipeline.hpp"

using namespace pixclust;

namespace {

FeatureRecipe recipe(const std::string& id, std::vector<std::string> sources) {
  FeatureRecipe r;
  r.id = id;
  r.sources = std::move(sources);
  return r;
}

FeatureTensor constant_tensor(Index h, Index w, Index c, float v) {
  FeatureTensor t(h, w, c);
  t.data.setConstant(v);
  return t;
}

}  // namespace

TEST_CASE("build_candidates: three equal dominant eigenvalues give K = 3") {
  const TensorStore store{{"sig", oracle::three_signature_tensor()}};
  const auto reps = build_candidates({recipe("fr", {"sig"})}, store, RunConfig{});
  REQUIRE(reps.size() == 1);
  REQUIRE(reps[0].ok());
  CHECK(reps[0].k == 3);
  CHECK(reps[0].pc_maps.cols() == 3);
  CHECK(reps[0].pc_maps.rows() == 24 * 24);

  // Direct check of the spectrum: standardized channels, pairs i / i+3
  // nearly identical, so three eigenvalues near 2 and three near 0.
  const auto& ev = reps[0].model.eigenvalues;
  for (Index j = 0; j < 3; ++j) CHECK(ev(j) == doctest::Approx(2.0).epsilon(0.15));
  for (Index j = 3; j < 6; ++j) CHECK(ev(j) < 1e-3);
}

TEST_CASE("build_candidates: independent K per recipe, errors recorded") {
  const TensorStore store{{"sig", oracle::three_signature_tensor()},
                          {"regions", oracle::three_region_tensor()},
                          {"flat", constant_tensor(4, 4, 3, 2.f)},
                          {"tiny", constant_tensor(1, 1, 3, 1.f)}};
  const auto reps = build_candidates(
      {recipe("a", {"sig"}), recipe("b", {"regions"}), recipe("c", {"flat"}), recipe("d", {"tiny"}),
       recipe("e", {"missing"})},
      store, RunConfig{});
  REQUIRE(reps.size() == 5);
  CHECK(reps[0].k == 3);
  CHECK(reps[1].k == 3);
  CHECK(reps[2].ok());
  CHECK(reps[2].k == 1);
  CHECK_FALSE(reps[3].ok());  // a single pixel cannot be fitted
  CHECK_FALSE(reps[4].ok());

  try {
    build_candidates({recipe("d", {"tiny"})}, store, RunConfig{});
    FAIL("expected AllRecipesFailed");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::AllRecipesFailed);
  }
}

TEST_CASE("build_candidates: fixed K override") {
  const TensorStore store{{"regions", oracle::three_region_tensor()}};
  RunConfig config;
  config.k_override = 5;
  const auto reps = build_candidates({recipe("fr", {"regions"})}, store, config);
  CHECK(reps[0].k == 5);
  CHECK(reps[0].pc_maps.cols() == 5);
  config.k_override = 7;
  CHECK_THROWS_AS(build_candidates({recipe("fr", {"regions"})}, store, config), Error);
}

TEST_CASE("upsample_labels") {
  ClusterLabels l;
  l.k = 4;
  l.labels = {0, 1, 2, 3};
  SUBCASE("same size is the identity") {
    const LabelMap m = upsample_labels(l, 2, 2, 2, 2);
    CHECK(m.labels == std::vector<std::uint8_t>{0, 1, 2, 3});
  }
  SUBCASE("2x2 to 4x4 fills quadrants") {
    const LabelMap m = upsample_labels(l, 2, 2, 4, 4);
    const std::vector<std::uint8_t> expected{0, 0, 1, 1, 0, 0, 1, 1, 2, 2, 3, 3, 2, 2, 3, 3};
    CHECK(m.labels == expected);
  }
  SUBCASE("1x1 grid floods the image") {
    ClusterLabels one;
    one.k = 1;
    one.labels = {0};
    const LabelMap m = upsample_labels(one, 1, 1, 5, 3);
    CHECK(m.labels == std::vector<std::uint8_t>(15, 0));
  }
  SUBCASE("downscaling picks the nearest cell centre") {
    ClusterLabels row;
    row.k = 4;
    row.labels = {0, 1, 2, 3};
    const LabelMap m = upsample_labels(row, 1, 4, 1, 2);
    CHECK(m.labels == std::vector<std::uint8_t>{1, 3});
  }
  SUBCASE("size mismatch") { CHECK_THROWS_AS(upsample_labels(l, 3, 3, 4, 4), Error); }
}

TEST_CASE("run_segmentation recovers the planted regions") {
  const TensorStore store{{"regions", oracle::three_region_tensor()}};
  const auto result = run_segmentation({recipe("fr", {"regions"})}, store, 32, 32, RunConfig{});
  REQUIRE(result.candidates.size() == 2);
  CHECK(result.candidates[0].method == ClusterMethod::KMeans);
  CHECK(result.candidates[1].method == ClusterMethod::Hierarchical);
  const auto& win = result.winning();
  CHECK(win.k == 3);
  CHECK(win.sr >= 0.95);
  for (const auto& c : result.candidates) CHECK(win.sr >= c.sr);

  const EvalReport r = evaluate(result.label_map, oracle::three_region_truth());
  CHECK(r.p_acc >= 0.99);

  std::set<int> distinct(result.label_map.labels.begin(), result.label_map.labels.end());
  CHECK(static_cast<Index>(distinct.size()) == win.k);
  CHECK(*distinct.rbegin() < win.k);

  // Larger output image: each feature cell covers a 3x3 block.
  const auto big = run_segmentation({recipe("fr", {"regions"})}, store, 96, 96, RunConfig{});
  CHECK(big.label_map.height == 96);
  CHECK(big.label_map.at(95, 95) == result.label_map.at(31, 31));
}

TEST_CASE("run_segmentation: tie-breaking and determinism") {
  const TensorStore store{{"regions", oracle::three_region_tensor()}};
  const auto result =
      run_segmentation({recipe("first", {"regions"}), recipe("second", {"regions"})}, store, 32, 32, RunConfig{});
  REQUIRE(result.candidates.size() == 4);
  CHECK(result.candidates[0].sr == result.candidates[2].sr);
  CHECK(result.candidates[1].sr == result.candidates[3].sr);
  CHECK(result.winning().recipe_id == "first");
  CHECK(result.winner < 2);

  const auto again =
      run_segmentation({recipe("first", {"regions"}), recipe("second", {"regions"})}, store, 32, 32, RunConfig{});
  CHECK(again.winner == result.winner);
  CHECK(again.label_map == result.label_map);
  for (std::size_t c = 0; c < result.candidates.size(); ++c) {
    CHECK(again.candidates[c].sr == result.candidates[c].sr);
    CHECK(again.candidates[c].labels.labels == result.candidates[c].labels.labels);
  }
}

TEST_CASE("run_segmentation: a single candidate always wins") {
  const TensorStore store{{"sig", oracle::three_signature_tensor()}};
  RunConfig config;
  config.methods = {ClusterMethod::Hierarchical};
  const auto result = run_segmentation({recipe("only", {"sig"})}, store, 24, 24, config);
  CHECK(result.candidates.size() == 1);
  CHECK(result.winner == 0);
  CHECK(result.candidates[0].ok());
}

TEST_CASE("run_segmentation: constant features leave nothing to choose") {
  const TensorStore store{{"flat", constant_tensor(6, 6, 4, 1.5f)}};
  try {
    run_segmentation({recipe("flat", {"flat"})}, store, 6, 6, RunConfig{});
    FAIL("expected AllCandidatesErrored");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::AllCandidatesErrored);
  }

  // Next to a usable recipe, the constant one stays in the table as errored.
  const TensorStore mixed{{"flat", constant_tensor(32, 32, 4, 1.5f)}, {"regions", oracle::three_region_tensor()}};
  const auto result =
      run_segmentation({recipe("flat", {"flat"}), recipe("fr", {"regions"})}, mixed, 32, 32, RunConfig{});
  REQUIRE(result.candidates.size() == 4);
  CHECK_FALSE(result.candidates[0].ok());
  CHECK(result.candidates[0].error->find("SingleCluster") != std::string::npos);
  CHECK(result.winning().recipe_id == "fr");
}

TEST_CASE("RunConfig validation") {
  RunConfig c;
  CHECK_NOTHROW(c.validate());
  c.t_eig = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = RunConfig{};
  c.t_sil = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = RunConfig{};
  c.methods.clear();
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("pc_map_image min-max scales to 0..255") {
  PcMaps maps(1, 3, RowMatrix<double>(3, 2));
  maps.values << -1, 4, 0, 4, 1, 4;
  CHECK(pc_map_image(maps, 0) == std::vector<std::uint8_t>{0, 128, 255});
  CHECK(pc_map_image(maps, 1) == std::vector<std::uint8_t>{0, 0, 0});
}
