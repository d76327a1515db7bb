#pragma once

#include <span>
#include <string>
#include <string_view>
#include <variant>

#include "noisy/eval.hpp"
#include "noisy/features.hpp"
#include "noisy/forest.hpp"
#include "noisy/svm.hpp"

namespace noisy {

inline constexpr int kModelFormatVersion = 1;

// A trained model together with the feature pipeline it was trained behind.
struct ModelFile {
  int format_version = kModelFormatVersion;
  Preprocessor preprocessor;
  std::variant<SvmModel, ForestModel> payload;

  bool is_svm() const { return std::holds_alternative<SvmModel>(payload); }
  Label predict(std::span<const double> raw_features) const;
};

// JSON documents. Doubles are written with round-trip precision.
// Parsing throws std::runtime_error on a malformed or mismatched document.
std::string serialize_model(const ModelFile& model);
ModelFile parse_model(std::string_view text);

std::string serialize_report(const EvalReport& report);
EvalReport parse_report(std::string_view text);

}  // namespace noisy
