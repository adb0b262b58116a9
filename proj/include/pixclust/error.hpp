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

#ifndef PIXCLUST_ERROR_HPP
#define PIXCLUST_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace pixclust {

enum class Errc {
  BadMagic,
  HeaderMismatch,
  NonFinite,
  IoFailure,
  UnsupportedPng,
  LabelOutOfRange,
  InvalidArgument,
  EmptyRecipe,
  DegenerateInput,
  KTooLarge,
  KExceedsPoints,
  TooManyPoints,
  SingleCluster,
  ClusterCollapse,
  AllRecipesFailed,
  AllCandidatesErrored,
  DimMismatch,
};

constexpr std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::BadMagic: return "BadMagic";
    case Errc::HeaderMismatch: return "HeaderMismatch";
    case Errc::NonFinite: return "NonFinite";
    case Errc::IoFailure: return "IoFailure";
    case Errc::UnsupportedPng: return "UnsupportedPng";
    case Errc::LabelOutOfRange: return "LabelOutOfRange";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::EmptyRecipe: return "EmptyRecipe";
    case Errc::DegenerateInput: return "DegenerateInput";
    case Errc::KTooLarge: return "KTooLarge";
    case Errc::KExceedsPoints: return "KExceedsPoints";
    case Errc::TooManyPoints: return "TooManyPoints";
    case Errc::SingleCluster: return "SingleCluster";
    case Errc::ClusterCollapse: return "ClusterCollapse";
    case Errc::AllRecipesFailed: return "AllRecipesFailed";
    case Errc::AllCandidatesErrored: return "AllCandidatesErrored";
    case Errc::DimMismatch: return "DimMismatch";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it onto a stable exit status.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace pixclust

#endif  // PIXCLUST_ERROR_HPP
