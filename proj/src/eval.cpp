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

#include "pixclust/eval.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <limits>

#include <boost/multiprecision/cpp_int.hpp>

#include "json.hpp"
#include "pixclust/tensor_io.hpp"

namespace pixclust {

namespace {

constexpr std::size_t kLabelSpace = 256;

// counts[p * 256 + g] = pixels labelled p in pred and g in gt.
struct Confusion {
  std::vector<Index> counts = std::vector<Index>(kLabelSpace * kLabelSpace, 0);
  std::array<Index, kLabelSpace> pred_total{};
  std::array<Index, kLabelSpace> gt_total{};
  Index pixels = 0;

  Index at(int p, int g) const { return counts[static_cast<std::size_t>(p) * kLabelSpace + static_cast<std::size_t>(g)]; }
};

Confusion confusion(const LabelMap& pred, const LabelMap& gt) {
  if (pred.height != gt.height || pred.width != gt.width || pred.labels.size() != gt.labels.size()) {
    throw Error(Errc::DimMismatch, "prediction and ground truth differ in size");
  }
  Confusion c;
  for (std::size_t i = 0; i < pred.labels.size(); ++i) {
    const auto p = pred.labels[i];
    const auto g = gt.labels[i];
    ++c.counts[static_cast<std::size_t>(p) * kLabelSpace + g];
    ++c.pred_total[p];
    ++c.gt_total[g];
  }
  c.pixels = static_cast<Index>(pred.labels.size());
  return c;
}

std::vector<int> present(const std::array<Index, kLabelSpace>& totals) {
  std::vector<int> out;
  for (std::size_t l = 0; l < kLabelSpace; ++l) {
    if (totals[l] > 0) out.push_back(static_cast<int>(l));
  }
  return out;
}

MatchedPair score_pair(const Confusion& c, int p, int g) {
  MatchedPair pair;
  pair.pred = p;
  pair.gt = g;
  pair.tp = c.at(p, g);
  pair.fp = c.pred_total[static_cast<std::size_t>(p)] - pair.tp;
  pair.fn = c.gt_total[static_cast<std::size_t>(g)] - pair.tp;
  const Index uni = pair.tp + pair.fp + pair.fn;
  pair.iou = uni > 0 ? static_cast<double>(pair.tp) / static_cast<double>(uni) : 0.0;
  return pair;
}

// (sum of tp/union over pairs) / n, accumulated as an exact rational so the
// result does not depend on pair order and is correctly rounded whenever
// the reduced fraction fits in 53 bits.
double exact_mean_iou(const std::vector<MatchedPair>& pairs, std::size_t n) {
  namespace mp = boost::multiprecision;
  mp::cpp_rational sum = 0;
  for (const auto& p : pairs) {
    const Index uni = p.tp + p.fp + p.fn;
    if (uni > 0) sum += mp::cpp_rational(mp::cpp_int(p.tp), mp::cpp_int(uni));
  }
  sum /= mp::cpp_rational(static_cast<long long>(n));
  const mp::cpp_int num = mp::numerator(sum);
  const mp::cpp_int den = mp::denominator(sum);
  const mp::cpp_int limit = mp::cpp_int(1) << 53;
  if (num <= limit && den <= limit) {
    return num.convert_to<double>() / den.convert_to<double>();
  }
  return sum.convert_to<double>();
}

}  // namespace

std::vector<int> solve_assignment(const Eigen::MatrixXd& weights) {
  const auto rows = static_cast<int>(weights.rows());
  const auto cols = static_cast<int>(weights.cols());
  const int n = std::max(rows, cols);
  if (n == 0) return {};
  auto cost = [&](int i, int j) {
    return (i < rows && j < cols) ? -weights(i, j) : 0.0;
  };

  // Shortest augmenting path with potentials, 1-based with a virtual column 0.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<int> p(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
    std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> assignment(static_cast<std::size_t>(rows), -1);
  for (int j = 1; j <= n; ++j) {
    const int i = p[static_cast<std::size_t>(j)] - 1;
    if (i >= 0 && i < rows && j - 1 < cols) assignment[static_cast<std::size_t>(i)] = j - 1;
  }
  return assignment;
}

Matching match_labels(const LabelMap& pred, const LabelMap& gt) {
  const Confusion c = confusion(pred, gt);
  Matching m;
  m.pred_labels = present(c.pred_total);
  m.gt_labels = present(c.gt_total);

  Eigen::MatrixXd iou(static_cast<Index>(m.pred_labels.size()), static_cast<Index>(m.gt_labels.size()));
  for (std::size_t r = 0; r < m.pred_labels.size(); ++r) {
    for (std::size_t q = 0; q < m.gt_labels.size(); ++q) {
      iou(static_cast<Index>(r), static_cast<Index>(q)) = score_pair(c, m.pred_labels[r], m.gt_labels[q]).iou;
    }
  }
  const auto assignment = solve_assignment(iou);

  std::vector<char> gt_taken(m.gt_labels.size(), 0);
  for (std::size_t r = 0; r < m.pred_labels.size(); ++r) {
    const int q = assignment[r];
    if (q >= 0 && iou(static_cast<Index>(r), q) > 0.0) {
      m.pairs.push_back(score_pair(c, m.pred_labels[r], m.gt_labels[static_cast<std::size_t>(q)]));
      gt_taken[static_cast<std::size_t>(q)] = 1;
    } else {
      m.unmatched_pred.push_back(m.pred_labels[r]);
    }
  }
  for (std::size_t q = 0; q < m.gt_labels.size(); ++q) {
    if (!gt_taken[q]) m.unmatched_gt.push_back(m.gt_labels[q]);
  }
  return m;
}

double pixel_accuracy(const LabelMap& pred, const LabelMap& gt, const Matching& matching) {
  const Confusion c = confusion(pred, gt);
  if (c.pixels == 0) return 0.0;
  Index correct = 0;
  for (const auto& pair : matching.pairs) correct += c.at(pair.pred, pair.gt);
  return static_cast<double>(correct) / static_cast<double>(c.pixels);
}

double mean_iou(const LabelMap& pred, const LabelMap& gt, const Matching& matching, NMode n_mode) {
  const Confusion c = confusion(pred, gt);
  const std::size_t n = n_mode == NMode::Clusters ? present(c.pred_total).size() : present(c.gt_total).size();
  if (n == 0) return 0.0;
  std::vector<MatchedPair> scored;
  scored.reserve(matching.pairs.size());
  for (const auto& pair : matching.pairs) scored.push_back(score_pair(c, pair.pred, pair.gt));
  return exact_mean_iou(scored, n);
}

EvalReport evaluate(const LabelMap& pred, const LabelMap& gt, NMode n_mode) {
  EvalReport report;
  report.n_mode = n_mode;
  report.matching = match_labels(pred, gt);
  report.p_acc = pixel_accuracy(pred, gt, report.matching);
  report.m_iou_clusters = mean_iou(pred, gt, report.matching, NMode::Clusters);
  report.m_iou_gt = mean_iou(pred, gt, report.matching, NMode::Gt);
  report.m_iou = n_mode == NMode::Clusters ? report.m_iou_clusters : report.m_iou_gt;
  report.n_classes_used = static_cast<Index>(n_mode == NMode::Clusters ? report.matching.pred_labels.size()
                                                                        : report.matching.gt_labels.size());
  return report;
}

std::vector<std::pair<std::filesystem::path, std::filesystem::path>> read_manifest(
    const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw Error(Errc::IoFailure, "cannot open manifest " + manifest.string());
  const auto base = manifest.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
  };

  std::vector<std::pair<std::filesystem::path, std::filesystem::path>> items;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto entry = nlohmann::json::parse(line, nullptr, false);
    if (entry.is_discarded() || !entry.is_object() || !entry.contains("pred") || !entry.contains("gt") ||
        !entry["pred"].is_string() || !entry["gt"].is_string()) {
      throw Error(Errc::InvalidArgument,
                  manifest.string() + ":" + std::to_string(line_no) + ": expected {\"pred\": ..., \"gt\": ...}");
    }
    items.emplace_back(resolve(entry["pred"].get<std::string>()), resolve(entry["gt"].get<std::string>()));
  }
  return items;
}

BatchReport evaluate_batch(
    const std::vector<std::pair<std::filesystem::path, std::filesystem::path>>& items, NMode n_mode) {
  BatchReport batch;
  for (const auto& [pred_path, gt_path] : items) {
    BatchEntry entry{pred_path, gt_path, evaluate(read_label_png(pred_path), read_label_png(gt_path), n_mode)};
    batch.mean_p_acc += entry.report.p_acc;
    batch.mean_m_iou += entry.report.m_iou;
    batch.mean_m_iou_clusters += entry.report.m_iou_clusters;
    batch.mean_m_iou_gt += entry.report.m_iou_gt;
    batch.entries.push_back(std::move(entry));
  }
  if (!batch.entries.empty()) {
    const auto count = static_cast<double>(batch.entries.size());
    batch.mean_p_acc /= count;
    batch.mean_m_iou /= count;
    batch.mean_m_iou_clusters /= count;
    batch.mean_m_iou_gt /= count;
  }
  return batch;
}

}  // namespace pixclust
