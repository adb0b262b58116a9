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

#include "pixclust/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pixclust/eval.hpp"
#include "pixclust/tensor_io.hpp"

namespace pixclust::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream stream(s);
  std::string item;
  while (std::getline(stream, item, sep)) parts.push_back(item);
  return parts;
}

Linkage parse_linkage(const std::string& name) {
  if (name == "ward") return Linkage::Ward;
  if (name == "single") return Linkage::Single;
  if (name == "complete") return Linkage::Complete;
  if (name == "average") return Linkage::Average;
  throw Error(Errc::InvalidArgument, "unknown linkage '" + name + "'");
}

std::string linkage_name(Linkage l) {
  switch (l) {
    case Linkage::Ward: return "ward";
    case Linkage::Single: return "single";
    case Linkage::Complete: return "complete";
    case Linkage::Average: return "average";
  }
  return "ward";
}

json sr_value(double sr) { return std::isfinite(sr) ? json(sr) : json(nullptr); }

json config_json(const RunConfig& config) {
  json methods = json::array();
  for (auto m : config.methods) methods.push_back(std::string(method_name(m)));
  return {
      {"t_eig", config.t_eig},
      {"t_sil", config.t_sil},
      {"seed", config.seed},
      {"methods", methods},
      {"k", config.k_override ? json(*config.k_override) : json(nullptr)},
      {"n_max_silhouette", config.n_max_silhouette},
      {"n_hier_max", config.n_hier_max},
      {"standardize", config.standardize},
      {"linkage", linkage_name(config.linkage)},
      {"max_iter", config.max_iter},
      {"tol", config.tol},
  };
}

json report_json(const SegmentationResult& result, const RunConfig& config, Index image_h, Index image_w) {
  json candidates = json::array();
  for (const auto& c : result.candidates) {
    json row = {{"recipe", c.recipe_id}, {"method", std::string(method_name(c.method))}, {"k", c.k},
                {"sr", sr_value(c.sr)}};
    if (c.error) row["error"] = *c.error;
    candidates.push_back(std::move(row));
  }
  json representations = json::array();
  for (const auto& r : result.representations) {
    json row = {{"recipe", r.recipe_id}, {"k", r.k}};
    if (r.ok()) {
      row["eigenvalues"] = std::vector<double>(r.model.eigenvalues.data(),
                                               r.model.eigenvalues.data() + r.model.eigenvalues.size());
      row["grid"] = {r.pc_maps.grid_h, r.pc_maps.grid_w};
    } else {
      row["error"] = *r.error;
    }
    representations.push_back(std::move(row));
  }
  const auto& win = result.winning();
  return {
      {"candidates", candidates},
      {"representations", representations},
      {"winner",
       {{"index", result.winner}, {"recipe", win.recipe_id}, {"method", std::string(method_name(win.method))},
        {"k", win.k}, {"sr", sr_value(win.sr)}}},
      {"seed", config.seed},
      {"image_size", {image_h, image_w}},
      {"config", config_json(config)},
  };
}

json eval_json(const EvalReport& r) {
  json pairs = json::array();
  for (const auto& p : r.matching.pairs) {
    pairs.push_back({{"pred", p.pred}, {"gt", p.gt}, {"tp", p.tp}, {"fp", p.fp}, {"fn", p.fn}, {"iou", p.iou}});
  }
  return {
      {"p_acc", r.p_acc},
      {"m_iou", r.m_iou},
      {"m_iou_clusters", r.m_iou_clusters},
      {"m_iou_gt", r.m_iou_gt},
      {"n_mode", r.n_mode == NMode::Clusters ? "clusters" : "gt"},
      {"n_classes_used", r.n_classes_used},
      {"matching", pairs},
      {"unmatched_pred", r.matching.unmatched_pred},
      {"unmatched_gt", r.matching.unmatched_gt},
  };
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(Errc::IoFailure, "write failed: " + path.string());
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case Errc::AllCandidatesErrored:
    case Errc::AllRecipesFailed:
      return kExitNoCandidate;
    case Errc::InvalidArgument:
      return kExitUsage;
    default:
      return kExitIo;
  }
}

// Flags shared by segment and inspect.
struct RunFlags {
  std::vector<std::string> recipes;
  std::string config_path;
  double t_eig = kDefaultEigenRatio;
  double t_sil = kDefaultSilhouetteThreshold;
  std::uint64_t seed = 0;
  std::string methods;
  Index k = 0;
  std::string linkage;
  bool no_standardize = false;
  bool json_out = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--recipe", f.recipes, "Feature recipe: name=a.ftz,b.ftz,... (repeatable)")->required();
  cmd->add_option("--config", f.config_path, "JSON file with RunConfig keys");
  cmd->add_option("--t-eig", f.t_eig, "Eigenvalue-ratio threshold for K");
  cmd->add_option("--t-sil", f.t_sil, "Silhouette threshold for the silhouette rate");
  cmd->add_option("--seed", f.seed, "k-means seed");
  cmd->add_option("--methods", f.methods, "Comma list of kmeans,hierarchical");
  cmd->add_option("--k", f.k, "Fixed cluster count instead of the eigenvalue rule");
  cmd->add_option("--linkage", f.linkage, "ward | single | complete | average");
  cmd->add_flag("--no-standardize", f.no_standardize, "Skip per-channel z-scoring");
  cmd->add_flag("--json", f.json_out, "Machine-readable output on stdout");
}

// defaults < config file < explicit flags
RunConfig resolve_config(const CLI::App* cmd, const RunFlags& f) {
  RunConfig config;
  if (!f.config_path.empty()) apply_config_file(f.config_path, config);
  if (cmd->count("--t-eig")) config.t_eig = f.t_eig;
  if (cmd->count("--t-sil")) config.t_sil = f.t_sil;
  if (cmd->count("--seed")) config.seed = f.seed;
  if (cmd->count("--methods")) config.methods = parse_methods(f.methods);
  if (cmd->count("--k")) config.k_override = f.k;
  if (cmd->count("--linkage")) config.linkage = parse_linkage(f.linkage);
  if (f.no_standardize) config.standardize = false;
  config.validate();
  return config;
}

std::vector<FeatureRecipe> load_recipes(const RunFlags& f, const RunConfig& config, TensorStore& store) {
  std::vector<FeatureRecipe> recipes;
  for (const auto& text : f.recipes) {
    FeatureRecipe recipe = parse_recipe(text);
    recipe.standardize = config.standardize;
    for (const auto& source : recipe.sources) {
      if (!store.count(source)) store.emplace(source, read_ftz(source));
    }
    recipes.push_back(std::move(recipe));
  }
  return recipes;
}

int cmd_segment(const CLI::App* cmd, const RunFlags& f, const std::string& out_dir, const std::string& image_size,
                std::ostream& out) {
  const RunConfig config = resolve_config(cmd, f);
  TensorStore store;
  const auto recipes = load_recipes(f, config, store);

  Index image_h = 0;
  Index image_w = 0;
  if (!image_size.empty()) {
    std::tie(image_h, image_w) = parse_image_size(image_size);
  } else {
    // Largest feature grid among the inputs.
    for (const auto& [name, t] : store) {
      if (t.height * t.width > image_h * image_w) {
        image_h = t.height;
        image_w = t.width;
      }
    }
  }

  const SegmentationResult result = run_segmentation(recipes, store, image_h, image_w, config);

  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoFailure, "cannot create " + dir.string() + ": " + ec.message());

  write_label_png(result.label_map, dir / "labelmap.png");
  const PcMaps& maps = result.winning_representation().pc_maps;
  for (Index j = 0; j < maps.cols(); ++j) {
    write_gray_png(maps.grid_h, maps.grid_w, pc_map_image(maps, j), dir / ("pcmap_" + std::to_string(j) + ".png"));
  }
  const json report = report_json(result, config, image_h, image_w);
  write_text(dir / "report.json", report.dump(2) + "\n");

  if (f.json_out) {
    out << report.dump() << "\n";
  } else {
    for (const auto& c : result.candidates) {
      out << c.recipe_id << "\t" << method_name(c.method) << "\tk=" << c.k << "\t";
      if (c.ok()) {
        out << "sr=" << c.sr;
      } else {
        out << "error: " << *c.error;
      }
      out << "\n";
    }
    const auto& win = result.winning();
    out << "winner: " << win.recipe_id << " " << method_name(win.method) << " k=" << win.k << " sr=" << win.sr
        << "\n";
  }
  return kExitOk;
}

int cmd_inspect(const CLI::App* cmd, const RunFlags& f, std::ostream& out) {
  if (f.recipes.size() != 1) throw Error(Errc::InvalidArgument, "inspect takes exactly one --recipe");
  const RunConfig config = resolve_config(cmd, f);
  TensorStore store;
  const auto recipes = load_recipes(f, config, store);
  std::vector<FeatureTensor> inputs;
  for (const auto& s : recipes.front().sources) inputs.push_back(store.at(s));
  const auto model = fit_pca(concat_features(recipes.front(), inputs), config.t_eig);

  const auto& ev = model.eigenvalues;
  std::vector<double> eigenvalues(ev.data(), ev.data() + ev.size());
  std::vector<double> ratios(eigenvalues.size(), 0.0);
  if (ev(0) > 0.0) {
    for (std::size_t j = 0; j < ratios.size(); ++j) ratios[j] = eigenvalues[j] / eigenvalues[0];
  }
  const json report = {{"recipe", recipes.front().id},
                       {"eigenvalues", eigenvalues},
                       {"ratios", ratios},
                       {"k_selected", model.k_selected},
                       {"t_eig", config.t_eig}};
  out << (f.json_out ? report.dump() : report.dump(2)) << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& pred, const std::string& gt, const std::string& manifest,
             const std::string& n_mode_name, const std::string& out_path, bool compact, std::ostream& out) {
  NMode n_mode = NMode::Clusters;
  if (n_mode_name == "gt") {
    n_mode = NMode::Gt;
  } else if (n_mode_name != "clusters") {
    throw Error(Errc::InvalidArgument, "--n-mode must be clusters or gt");
  }

  json report;
  if (!manifest.empty()) {
    if (!pred.empty() || !gt.empty()) throw Error(Errc::InvalidArgument, "use either --manifest or --pred/--gt");
    const BatchReport batch = evaluate_batch(read_manifest(manifest), n_mode);
    json images = json::array();
    for (const auto& e : batch.entries) {
      json row = eval_json(e.report);
      row["pred"] = e.pred.string();
      row["gt"] = e.gt.string();
      images.push_back(std::move(row));
    }
    report = {{"images", images},
              {"aggregate",
               {{"count", batch.entries.size()},
                {"p_acc", batch.mean_p_acc},
                {"m_iou", batch.mean_m_iou},
                {"m_iou_clusters", batch.mean_m_iou_clusters},
                {"m_iou_gt", batch.mean_m_iou_gt},
                {"n_mode", n_mode == NMode::Clusters ? "clusters" : "gt"}}}};
  } else {
    if (pred.empty() || gt.empty()) throw Error(Errc::InvalidArgument, "--pred and --gt are both required");
    report = eval_json(evaluate(read_label_png(pred), read_label_png(gt), n_mode));
  }
  if (!out_path.empty()) write_text(out_path, report.dump(2) + "\n");
  out << (compact ? report.dump() : report.dump(2)) << "\n";
  return kExitOk;
}

}  // namespace

FeatureRecipe parse_recipe(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == text.size()) {
    throw Error(Errc::InvalidArgument, "recipe must look like name=path1,path2: '" + text + "'");
  }
  FeatureRecipe recipe;
  recipe.id = text.substr(0, eq);
  for (auto& source : split(text.substr(eq + 1), ',')) {
    if (source.empty()) throw Error(Errc::InvalidArgument, "empty path in recipe '" + text + "'");
    recipe.sources.push_back(std::move(source));
  }
  return recipe;
}

std::pair<Index, Index> parse_image_size(const std::string& text) {
  const auto x = text.find_first_of("xX");
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    std::size_t used_h = 0;
    std::size_t used_w = 0;
    const std::string hs = text.substr(0, x);
    const std::string ws = text.substr(x + 1);
    const long long h = std::stoll(hs, &used_h);
    const long long w = std::stoll(ws, &used_w);
    if (used_h != hs.size() || used_w != ws.size() || h < 1 || w < 1) throw std::invalid_argument(text);
    return {static_cast<Index>(h), static_cast<Index>(w)};
  } catch (const std::logic_error&) {
    throw Error(Errc::InvalidArgument, "image size must look like HxW: '" + text + "'");
  }
}

std::vector<ClusterMethod> parse_methods(const std::string& text) {
  std::vector<ClusterMethod> methods;
  for (const auto& name : split(text, ',')) {
    ClusterMethod m;
    if (name == "kmeans") {
      m = ClusterMethod::KMeans;
    } else if (name == "hierarchical") {
      m = ClusterMethod::Hierarchical;
    } else {
      throw Error(Errc::InvalidArgument, "unknown method '" + name + "'");
    }
    if (std::find(methods.begin(), methods.end(), m) == methods.end()) methods.push_back(m);
  }
  // Candidate order is always kmeans before hierarchical.
  std::sort(methods.begin(), methods.end());
  if (methods.empty()) throw Error(Errc::InvalidArgument, "no clustering methods given");
  return methods;
}

void apply_config_file(const std::string& path, RunConfig& config) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open config " + path);
  const json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw Error(Errc::InvalidArgument, path + ": not a JSON object");
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "t_eig") {
        config.t_eig = value.get<double>();
      } else if (key == "t_sil") {
        config.t_sil = value.get<double>();
      } else if (key == "seed") {
        config.seed = value.get<std::uint64_t>();
      } else if (key == "methods") {
        if (value.is_string()) {
          config.methods = parse_methods(value.get<std::string>());
        } else {
          std::string joined;
          for (const auto& m : value) joined += (joined.empty() ? "" : ",") + m.get<std::string>();
          config.methods = parse_methods(joined);
        }
      } else if (key == "k" || key == "k_override") {
        if (value.is_null()) {
          config.k_override.reset();
        } else {
          config.k_override = value.get<Index>();
        }
      } else if (key == "n_max_silhouette") {
        config.n_max_silhouette = value.get<Index>();
      } else if (key == "n_hier_max") {
        config.n_hier_max = value.get<Index>();
      } else if (key == "standardize") {
        config.standardize = value.get<bool>();
      } else if (key == "linkage") {
        config.linkage = parse_linkage(value.get<std::string>());
      } else if (key == "max_iter") {
        config.max_iter = value.get<int>();
      } else if (key == "tol") {
        config.tol = value.get<double>();
      } else {
        throw Error(Errc::InvalidArgument, path + ": unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidArgument, path + ": " + e.what());
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Unsupervised segmentation by clustering principal components of CNN features", "pixclust"};
  app.require_subcommand(1);

  RunFlags seg_flags;
  std::string out_dir;
  std::string image_size;
  auto* segment = app.add_subcommand("segment", "Cluster feature tensors into a label map");
  add_run_flags(segment, seg_flags);
  segment->add_option("--out", out_dir, "Output directory")->required();
  segment->add_option("--image-size", image_size, "Label-map size HxW (default: largest feature grid)");

  RunFlags inspect_flags;
  auto* inspect = app.add_subcommand("inspect", "Print the eigenvalue spectrum and selected K of one recipe");
  add_run_flags(inspect, inspect_flags);

  std::string pred, gt, manifest, n_mode = "clusters", eval_out;
  bool eval_json_flag = false;
  auto* eval = app.add_subcommand("eval", "Score predicted label maps against ground truth");
  eval->add_option("--pred", pred, "Predicted label PNG");
  eval->add_option("--gt", gt, "Ground-truth label PNG");
  eval->add_option("--manifest", manifest, "JSON-lines file of {\"pred\": ..., \"gt\": ...}");
  eval->add_option("--n-mode", n_mode, "mIoU divisor: clusters | gt");
  eval->add_option("--out", eval_out, "Also write the report to this file");
  eval->add_flag("--json", eval_json_flag, "Compact single-line JSON");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*segment) return cmd_segment(segment, seg_flags, out_dir, image_size, out);
    if (*inspect) return cmd_inspect(inspect, inspect_flags, out);
    return cmd_eval(pred, gt, manifest, n_mode, eval_out, eval_json_flag, out);
  } catch (const Error& e) {
    err << "pixclust: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "pixclust: " << e.what() << "\n";
    return kExitIo;
  }
}

}  // namespace pixclust::cli
