#pragma once

#include "ngmeet/pipeline.hpp"

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <vector>

namespace ngmeet {

using KeyValues = std::map<std::string, std::string>;

/// "key = value" lines; blank lines and '#' comments ignored, keys lowercased.
/// `source` only labels error messages.
KeyValues parse_key_values(std::istream& in, const std::string& source);
KeyValues read_key_value_file(const std::filesystem::path& path);

/// Applies recognized keys (k0, delta, lambda, gamma, iters, patch, stride,
/// window, group, wnnm_c, wnnm_eps, wnnm_scaling, center_groups, rank_update, early_stop,
/// threads, seed). Unknown keys are a usage error.
void apply_config(DenoiseConfig& cfg, const KeyValues& kv);

/// "0-102,108,110-148" -> sorted, de-duplicated indices.
std::vector<std::size_t> parse_index_list(const std::string& text);

}  // namespace ngmeet
