#include "ngmeet/config.hpp"

#include "ngmeet/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace ngmeet {

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw usage_error("config key '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw usage_error("config key '" + key + "' expects a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw usage_error("config key '" + key + "' expects a boolean, got '" + v + "'");
}

}  // namespace

KeyValues parse_key_values(std::istream& in, const std::string& source) {
  KeyValues kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw usage_error(source + ":" + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (key.empty()) throw usage_error(source + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues read_key_value_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw usage_error("cannot open config file " + path.string());
  return parse_key_values(in, path.string());
}

void apply_config(DenoiseConfig& cfg, const KeyValues& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "k0") {
      if (value == "auto") cfg.k0.reset();
      else cfg.k0 = to_size(key, value);
    } else if (key == "delta") {
      cfg.delta = to_size(key, value);
    } else if (key == "lambda") {
      cfg.lambda = to_double(key, value);
    } else if (key == "gamma") {
      cfg.gamma = to_double(key, value);
    } else if (key == "iters") {
      cfg.iters = to_size(key, value);
    } else if (key == "patch") {
      cfg.geom.patch = to_size(key, value);
    } else if (key == "stride") {
      cfg.geom.stride = to_size(key, value);
    } else if (key == "window") {
      cfg.geom.window = to_size(key, value);
    } else if (key == "group") {
      cfg.geom.group = to_size(key, value);
    } else if (key == "wnnm_c") {
      cfg.wnnm.c = to_double(key, value);
    } else if (key == "wnnm_eps") {
      cfg.wnnm.eps = to_double(key, value);
    } else if (key == "wnnm_scaling") {
      if (value == "columns") {
        cfg.wnnm.scaling = WnnmScaling::Columns;
      } else if (value == "dominant") {
        cfg.wnnm.scaling = WnnmScaling::Dominant;
      } else {
        throw usage_error("wnnm_scaling must be columns or dominant, got '" + value + "'");
      }
    } else if (key == "center_groups") {
      cfg.center_groups = to_bool(key, value);
    } else if (key == "rank_update") {
      if (value == "cumulative") cfg.rank_update = RankUpdate::Cumulative;
      else if (value == "affine") cfg.rank_update = RankUpdate::Affine;
      else throw usage_error("rank_update must be 'cumulative' or 'affine'");
    } else if (key == "early_stop") {
      cfg.early_stop_tol = to_double(key, value);
    } else if (key == "threads") {
      cfg.threads = static_cast<unsigned>(to_size(key, value));
    } else if (key == "seed") {
      cfg.seed = to_size(key, value);
    } else {
      throw usage_error("unknown config key '" + key + "'");
    }
  }
}

std::vector<std::size_t> parse_index_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      out.push_back(to_size("index list", item));
      continue;
    }
    const auto lo = to_size("index list", trim(item.substr(0, dash)));
    const auto hi = to_size("index list", trim(item.substr(dash + 1)));
    if (hi < lo) throw usage_error("descending range '" + item + "' in index list");
    for (auto i = lo; i <= hi; ++i) out.push_back(i);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.empty()) throw usage_error("empty index list");
  return out;
}

}  // namespace ngmeet
