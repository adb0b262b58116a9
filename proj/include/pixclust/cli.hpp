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

#ifndef PIXCLUST_CLI_HPP
#define PIXCLUST_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "pixclust/feature_prep.hpp"
#include "pixclust/pipeline.hpp"

namespace pixclust::cli {

// Exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;           // unreadable/unwritable files, bad input data
inline constexpr int kExitNoCandidate = 2;  // every candidate (or recipe) errored
inline constexpr int kExitUsage = 3;        // bad flags

/// Parses "name=path1,path2,...". Sources are listed in order.
FeatureRecipe parse_recipe(const std::string& text);

/// Parses "HxW".
std::pair<Index, Index> parse_image_size(const std::string& text);

std::vector<ClusterMethod> parse_methods(const std::string& text);

/// Applies the keys of a JSON config file onto `config`.
void apply_config_file(const std::string& path, RunConfig& config);

/// Entry point shared by the executable and the tests. args[0] is the
/// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pixclust::cli

#endif  // PIXCLUST_CLI_HPP
