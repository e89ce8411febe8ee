// params_io.hpp -- ModelParams <-> key-value documents.
//
// Keys: B, alpha, c1_pos, c2_pos, c3_pos, c1_neg, c2_neg, c3_neg, cv_pos,
// cv_neg, refractory_us and the optional lambda_max.
#pragma once

#include <compare>
#include <filesystem>
#include <map>

#include "ecnoise/keyvalue.hpp"
#include "ecnoise/model.hpp"

namespace ecnoise {

ModelParams params_from_kv(const KeyValue& kv);
KeyValue params_to_kv(const ModelParams& params);

/// Reads and validates a .params file.
ModelParams read_params(const std::filesystem::path& path);
void write_params(const std::filesystem::path& path, const ModelParams& params);

/// Bias configuration a params-set row was fitted at.
struct BiasKey {
  int fo = 0;
  int hpf = 0;
  auto operator<=>(const BiasKey&) const = default;
};

/// A .params_set file holds one "[fo=<int> hpf=<int>]" section per row, each
/// followed by the usual params keys.
std::map<BiasKey, ModelParams> parse_params_set(const std::string& text, const std::string& origin);
std::map<BiasKey, ModelParams> read_params_set(const std::filesystem::path& path);

}  // namespace ecnoise
