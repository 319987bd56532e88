// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0

#include "dimosr/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace dimosr {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Strips a trailing comment that is not inside a string.
std::string_view strip_comment(std::string_view line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

bool bare_key(std::string_view k) {
  return !k.empty() && std::all_of(k.begin(), k.end(), [](char ch) {
    return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-';
  });
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  std::string t;
  for (char ch : s) if (ch != '_') t.push_back(ch);
  if (!t.empty() && t[0] == '+') t.erase(0, 1);
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty()) return std::nullopt;
  return v;
}

std::optional<double> parse_float(std::string_view s) {
  std::string t;
  for (char ch : s) if (ch != '_') t.push_back(ch);
  if (t.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<std::string> parse_string(std::string_view s) {
  if (s.size() < 2 || s.front() != '"' || s.back() != '"') return std::nullopt;
  std::string out;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    char ch = s[i];
    if (ch == '\\') {
      if (i + 2 >= s.size()) return std::nullopt;
      const char e = s[++i];
      switch (e) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        default: return std::nullopt;
      }
    } else if (ch == '"') {
      return std::nullopt;
    } else {
      out.push_back(ch);
    }
  }
  return out;
}

std::optional<TomlValue> parse_value(std::string_view s) {
  s = trim(s);
  if (s == "true") return TomlValue{true};
  if (s == "false") return TomlValue{false};
  if (auto str = parse_string(s)) return TomlValue{*str};
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']') return std::nullopt;
    std::vector<std::int64_t> items;
    std::string_view body = trim(s.substr(1, s.size() - 2));
    while (!body.empty()) {
      const auto comma = body.find(',');
      const auto item = trim(body.substr(0, comma));
      if (!item.empty()) {
        auto v = parse_int(item);
        if (!v) return std::nullopt;
        items.push_back(*v);
      }
      if (comma == std::string_view::npos) break;
      body = body.substr(comma + 1);
    }
    return TomlValue{items};
  }
  if (auto i = parse_int(s)) return TomlValue{*i};
  if (auto f = parse_float(s)) return TomlValue{*f};
  return std::nullopt;
}

std::string canonical_key(std::string_view key) {
  std::string k(trim(key));
  std::replace(k.begin(), k.end(), '-', '_');
  return k;
}

const char* type_name(const TomlValue& v) {
  switch (v.index()) {
    case 0: return "integer";
    case 1: return "float";
    case 2: return "boolean";
    case 3: return "string";
    default: return "integer array";
  }
}

[[noreturn]] void type_error(const std::string& key, const char* want, const TomlValue& got) {
  throw ConfigError("config key '" + key + "' expects " + want + ", got " + type_name(got));
}

std::int64_t as_int(const std::string& key, const TomlValue& v) {
  if (auto* i = std::get_if<std::int64_t>(&v)) return *i;
  type_error(key, "an integer", v);
}

int as_int32(const std::string& key, const TomlValue& v) {
  const std::int64_t i = as_int(key, v);
  if (i < INT32_MIN || i > INT32_MAX) throw ConfigError("config key '" + key + "' is out of range");
  return static_cast<int>(i);
}

double as_double(const std::string& key, const TomlValue& v) {
  if (auto* d = std::get_if<double>(&v)) return *d;
  if (auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  type_error(key, "a number", v);
}

bool as_bool(const std::string& key, const TomlValue& v) {
  if (auto* b = std::get_if<bool>(&v)) return *b;
  type_error(key, "a boolean", v);
}

std::string as_string(const std::string& key, const TomlValue& v) {
  if (auto* s = std::get_if<std::string>(&v)) return *s;
  type_error(key, "a string", v);
}

std::vector<int> as_int_list(const std::string& key, const TomlValue& v) {
  if (auto* a = std::get_if<std::vector<std::int64_t>>(&v)) {
    std::vector<int> out;
    for (auto x : *a) out.push_back(as_int32(key, TomlValue{x}));
    return out;
  }
  type_error(key, "an integer array", v);
}

std::string fmt_double(double d) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, d);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

std::string fmt_string(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out.push_back('\\');
    out.push_back(ch);
  }
  return out + "\"";
}

struct Field {
  const char* key;
  const char* help;
  std::function<void(RunConfig&, const std::string&, const TomlValue&)> set;
  std::function<std::optional<std::string>(const RunConfig&)> get;
};

#define INT_FIELD(KEY, HELP, MEMBER)                                                              \
  Field {                                                                                         \
    KEY, HELP, [](RunConfig& c, const std::string& k, const TomlValue& v) { c.MEMBER = as_int32(k, v); }, \
        [](const RunConfig& c) -> std::optional<std::string> { return std::to_string(c.MEMBER); }  \
  }
#define INT64_FIELD(KEY, HELP, MEMBER)                                                            \
  Field {                                                                                         \
    KEY, HELP, [](RunConfig& c, const std::string& k, const TomlValue& v) { c.MEMBER = as_int(k, v); }, \
        [](const RunConfig& c) -> std::optional<std::string> { return std::to_string(c.MEMBER); }  \
  }
#define DOUBLE_FIELD(KEY, HELP, MEMBER)                                                           \
  Field {                                                                                         \
    KEY, HELP, [](RunConfig& c, const std::string& k, const TomlValue& v) { c.MEMBER = as_double(k, v); }, \
        [](const RunConfig& c) -> std::optional<std::string> { return fmt_double(c.MEMBER); }      \
  }
#define BOOL_FIELD(KEY, HELP, MEMBER)                                                             \
  Field {                                                                                         \
    KEY, HELP, [](RunConfig& c, const std::string& k, const TomlValue& v) { c.MEMBER = as_bool(k, v); }, \
        [](const RunConfig& c) -> std::optional<std::string> { return c.MEMBER ? "true" : "false"; } \
  }
#define STRING_FIELD(KEY, HELP, MEMBER)                                                           \
  Field {                                                                                         \
    KEY, HELP, [](RunConfig& c, const std::string& k, const TomlValue& v) { c.MEMBER = as_string(k, v); }, \
        [](const RunConfig& c) -> std::optional<std::string> { return fmt_string(c.MEMBER); }      \
  }

const std::vector<Field>& schema() {
  static const std::vector<Field> fields = {
      INT_FIELD("model.channels", "feature channels C", model.channels),
      INT_FIELD("model.num_blocks", "number of DMBs", model.num_blocks),
      INT_FIELD("model.group_size", "DMBs per residual group", model.group_size),
      Field{"model.dilations", "FEB branch dilations, e.g. [4, 8, 12, 16]",
            [](RunConfig& c, const std::string& k, const TomlValue& v) { c.model.dilations = as_int_list(k, v); },
            [](const RunConfig& c) -> std::optional<std::string> {
              std::string s = "[";
              for (std::size_t i = 0; i < c.model.dilations.size(); ++i) {
                s += (i ? ", " : "") + std::to_string(c.model.dilations[i]);
              }
              return s + "]";
            }},
      INT_FIELD("model.branch_width", "channels per FEB branch", model.branch_width),
      INT_FIELD("model.erb_hidden", "ERB bottleneck width", model.erb_hidden),
      INT_FIELD("model.erb_depth", "3x3 convs inside the ERB", model.erb_depth),
      INT_FIELD("model.scale", "upscaling factor (2, 3 or 4)", model.scale),
      BOOL_FIELD("model.enable_attention", "FEB attention output", model.enable_attention),
      BOOL_FIELD("model.enable_modulation", "FEB modulation output", model.enable_modulation),
      INT64_FIELD("train.iterations", "total optimizer steps", train.iterations),
      INT_FIELD("train.batch_size", "patches per step", train.batch_size),
      INT_FIELD("train.patch_lr", "LR patch side in pixels", train.patch_lr),
      DOUBLE_FIELD("train.lr_start", "initial learning rate", train.lr_start),
      DOUBLE_FIELD("train.lr_min", "final learning rate", train.lr_min),
      DOUBLE_FIELD("train.lambda", "frequency loss weight", train.lambda),
      Field{"train.seed", "model init and sampling seed",
            [](RunConfig& c, const std::string& k, const TomlValue& v) {
              const std::int64_t s = as_int(k, v);
              if (s < 0) throw ConfigError("config key '" + k + "' must be >= 0");
              c.train.seed = static_cast<std::uint64_t>(s);
            },
            [](const RunConfig& c) -> std::optional<std::string> { return std::to_string(c.train.seed); }},
      INT64_FIELD("train.eval_every", "evaluation cadence; the final iteration is always evaluated (0 = final only)", train.eval_every),
      INT64_FIELD("train.checkpoint_every", "checkpoint cadence (0 = final only)", train.checkpoint_every),
      INT64_FIELD("train.log_every", "log cadence (0 = off)", train.log_every),
      INT_FIELD("train.loss_tail", "losses kept in checkpoint metadata", train.loss_tail),
      BOOL_FIELD("train.augment", "random flips and rotations", train.augment),
      Field{"eval.border_crop", "border pixels excluded from metrics (default: scale)",
            [](RunConfig& c, const std::string& k, const TomlValue& v) { c.border_crop = as_int32(k, v); },
            [](const RunConfig& c) -> std::optional<std::string> {
              if (!c.border_crop) return std::nullopt;
              return std::to_string(*c.border_crop);
            }},
      BOOL_FIELD("eval.y_only", "metrics on luma only", y_only),
      STRING_FIELD("data.train_manifest", "training manifest JSON", train_manifest),
      STRING_FIELD("data.val_manifest", "validation manifest JSON", val_manifest),
      STRING_FIELD("output.dir", "directory for checkpoints and logs", output_dir),
  };
  return fields;
}

#undef INT_FIELD
#undef INT64_FIELD
#undef DOUBLE_FIELD
#undef BOOL_FIELD
#undef STRING_FIELD

const Field& field(const std::string& key) {
  for (const auto& f : schema()) {
    if (key == f.key) return f;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

std::map<std::string, TomlValue> parse_toml(std::string_view text) {
  std::map<std::string, TomlValue> out;
  std::string table;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated table header");
      const auto name = trim(line.substr(1, line.size() - 2));
      if (!bare_key(name)) throw ConfigError(where + "invalid table name '" + std::string(name) + "'");
      table = std::string(name);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    if (!bare_key(key)) throw ConfigError(where + "invalid key '" + std::string(key) + "'");
    auto value = parse_value(line.substr(eq + 1));
    if (!value) throw ConfigError(where + "cannot parse value '" + std::string(trim(line.substr(eq + 1))) + "'");
    const std::string full = table.empty() ? std::string(key) : table + "." + std::string(key);
    if (!out.emplace(full, std::move(*value)).second) throw ConfigError(where + "duplicate key '" + full + "'");
  }
  return out;
}

RunConfig RunConfig::preset(std::string_view name, int scale) {
  RunConfig c;
  const bool toy = name == "toy";
  c.model = ModelConfig::preset(name, scale > 0 ? scale : (toy ? 2 : 4));
  if (toy) {
    c.train.iterations = 2000;
    c.train.batch_size = 8;
    c.train.patch_lr = 32;
    c.train.lr_start = 4e-3;
    c.train.eval_every = 500;
    c.train.checkpoint_every = 0;
    c.train.log_every = 100;
    c.train.seed = 1;
    c.output_dir = "runs/toy";
  } else {
    c.output_dir = "runs/" + std::string(name);
  }
  return c;
}

void RunConfig::apply_text(std::string_view toml) {
  for (const auto& [key, value] : parse_toml(toml)) field(canonical_key(key)).set(*this, canonical_key(key), value);
}

void RunConfig::apply_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    apply_text(buf.str());
  } catch (const ConfigError& ex) {
    throw ConfigError(path.string() + ": " + ex.what());
  }
}

void RunConfig::set(std::string_view key, std::string_view value) {
  const std::string k = canonical_key(key);
  const Field& f = field(k);
  auto parsed = parse_value(value);
  if (!parsed) {
    const auto v = trim(value);
    // Bare words and comma lists as conveniences on the command line.
    if (!v.empty() && std::isdigit(static_cast<unsigned char>(v.front())) && v.find(',') != std::string_view::npos) {
      parsed = parse_value("[" + std::string(v) + "]");
    }
    if (!parsed) parsed = TomlValue{std::string(v)};
  }
  f.set(*this, k, *parsed);
}

void RunConfig::validate() const {
  model.validate();
  train.validate();
  if (border_crop && *border_crop < 0) throw ConfigError("eval.border_crop must be >= 0");
}

std::string RunConfig::to_toml() const {
  std::string out;
  std::string table;
  for (const auto& f : schema()) {
    const std::string key = f.key;
    const auto dot = key.find('.');
    const std::string t = key.substr(0, dot);
    const auto value = f.get(*this);
    if (!value) continue;
    if (t != table) {
      out += (out.empty() ? "[" : "\n[") + t + "]\n";
      table = t;
    }
    out += key.substr(dot + 1) + " = " + *value + "\n";
  }
  return out;
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& f : schema()) out.emplace_back(f.key);
  return out;
}

std::string RunConfig::describe(const std::string& key) { return field(canonical_key(key)).help; }

}  // namespace dimosr
