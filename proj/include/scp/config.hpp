#pragma once

// Run configuration files: `key = value` lines grouped under [train], [data]
// and [output]; `#` and `;` start comments. Keys under [train] are the
// TrainConfig field names. Unknown sections and keys are rejected.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "scp/error.hpp"
#include "scp/trainer.hpp"

namespace scp {

struct RunConfig {
  TrainConfig train;
  std::string features;
  std::string mix;  // empty: no second feature file
  std::string out = "scp_out";

  bool operator==(const RunConfig&) const = default;
};

struct IniEntry {
  std::string section;
  std::string key;
  std::string value;
  std::size_t line = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
T parse_number(std::string_view text, std::string_view what) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError(std::string(what) + ": cannot parse '" + std::string(text) + "'");
  }
  return value;
}

inline bool parse_bool(std::string_view text, std::string_view what) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError(std::string(what) + ": expected a boolean, got '" + std::string(text) + "'");
}

}  // namespace detail

inline HiddenDims parse_hidden(std::string_view text, std::string_view what = "hidden") {
  HiddenDims dims{};
  std::size_t i = 0;
  while (true) {
    const auto comma = text.find(',');
    const auto piece = detail::trim(text.substr(0, comma));
    if (i == dims.size()) throw ConfigError(std::string(what) + ": expected 4 widths");
    dims[i++] = detail::parse_number<std::size_t>(piece, what);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (i != dims.size()) throw ConfigError(std::string(what) + ": expected 4 widths");
  return dims;
}

inline std::vector<IniEntry> parse_ini(std::string_view text, const std::string& source) {
  std::vector<IniEntry> out;
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    auto line = detail::trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const auto where = source + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected key = value");
    IniEntry e{section, std::string(detail::trim(line.substr(0, eq))),
               std::string(detail::trim(line.substr(eq + 1))), line_no};
    if (e.key.empty()) throw ConfigError(where + ": empty key");
    out.push_back(std::move(e));
  }
  return out;
}

inline void apply_entry(RunConfig& rc, const IniEntry& e, const std::string& source) {
  const std::string where = source + ":" + std::to_string(e.line) + ": " + e.key;
  auto& t = rc.train;
  using Setter = std::function<void(const std::string&)>;
  auto uint_field = [&](std::size_t& f) {
    return Setter([&f, where](const std::string& v) { f = detail::parse_number<std::size_t>(v, where); });
  };
  auto real_field = [&](double& f) {
    return Setter([&f, where](const std::string& v) { f = detail::parse_number<double>(v, where); });
  };
  auto bool_field = [&](bool& f) {
    return Setter([&f, where](const std::string& v) { f = detail::parse_bool(v, where); });
  };

  const std::map<std::string, std::map<std::string, Setter>> table{
      {"train",
       {{"k", uint_field(t.k)},
        {"alpha", real_field(t.alpha)},
        {"epochs", uint_field(t.epochs)},
        {"batch_size", uint_field(t.batch_size)},
        {"lr_init", real_field(t.lr_init)},
        {"lr_min", real_field(t.lr_min)},
        {"seed", [&](const std::string& v) { t.seed = detail::parse_number<std::uint64_t>(v, where); }},
        {"activation", [&](const std::string& v) { t.activation = parse_activation(v); }},
        {"symmetrize_le", bool_field(t.symmetrize_le)},
        {"le_reduction", [&](const std::string& v) { t.le_reduction = parse_reduction(v); }},
        {"l2_normalize", bool_field(t.l2_normalize)},
        {"log_every", uint_field(t.log_every)},
        {"eval_every_epochs", uint_field(t.eval_every_epochs)},
        {"hidden", [&](const std::string& v) { t.hidden = parse_hidden(v, where); }},
        {"clip_norm", real_field(t.clip_norm)}}},
      {"data",
       {{"features", [&](const std::string& v) { rc.features = v; }},
        {"mix", [&](const std::string& v) { rc.mix = v; }}}},
      {"output", {{"out", [&](const std::string& v) { rc.out = v; }}}},
  };
  const auto sec = table.find(e.section);
  if (sec == table.end()) {
    throw ConfigError(source + ":" + std::to_string(e.line) + ": unknown section [" + e.section + "]");
  }
  const auto key = sec->second.find(e.key);
  if (key == sec->second.end()) {
    throw ConfigError(source + ":" + std::to_string(e.line) + ": unknown key '" + e.key + "' in [" +
                      e.section + "]");
  }
  key->second(e.value);
}

inline void apply_ini(RunConfig& rc, std::string_view text, const std::string& source) {
  for (const auto& e : parse_ini(text, source)) apply_entry(rc, e, source);
}

inline void load_config_file(RunConfig& rc, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  apply_ini(rc, text.str(), path.string());
}

/// Cluster count and entropy weight for common image benchmarks.
inline void apply_preset(TrainConfig& cfg, std::string_view name) {
  if (name == "cifar10") {
    cfg.k = 10;
    cfg.alpha = 1.0;
  } else if (name == "cifar20") {
    cfg.k = 20;
    cfg.alpha = 2.0;
  } else if (name == "cifar100") {
    cfg.k = 100;
    cfg.alpha = 3.0;
  } else if (name == "imagenet-dogs") {
    cfg.k = 15;
    cfg.alpha = 2.0;
  } else {
    throw ConfigError("unknown preset '" + std::string(name) +
                      "' (expected cifar10, cifar20, cifar100 or imagenet-dogs)");
  }
}

/// Inverse of apply_ini: feeding the output back reproduces `rc`.
inline std::string render_ini(const RunConfig& rc) {
  const auto& t = rc.train;
  std::ostringstream os;
  os << std::setprecision(17) << std::boolalpha;
  os << "[train]\n"
     << "k = " << t.k << "\nalpha = " << t.alpha << "\nepochs = " << t.epochs
     << "\nbatch_size = " << t.batch_size << "\nlr_init = " << t.lr_init << "\nlr_min = " << t.lr_min
     << "\nseed = " << t.seed << "\nactivation = " << to_string(t.activation)
     << "\nsymmetrize_le = " << t.symmetrize_le << "\nle_reduction = " << to_string(t.le_reduction)
     << "\nl2_normalize = " << t.l2_normalize << "\nlog_every = " << t.log_every
     << "\neval_every_epochs = " << t.eval_every_epochs << "\nhidden = " << t.hidden[0] << ','
     << t.hidden[1] << ',' << t.hidden[2] << ',' << t.hidden[3] << "\nclip_norm = " << t.clip_norm
     << "\n\n[data]\nfeatures = " << rc.features << '\n';
  if (!rc.mix.empty()) os << "mix = " << rc.mix << '\n';
  os << "\n[output]\nout = " << rc.out << '\n';
  return os.str();
}

}  // namespace scp
