#include "pqpan/config.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pqpan/errors.hpp"

namespace pqpan {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

/// Strips a trailing '#' comment that is not inside a quoted string.
std::string strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return std::string(line.substr(0, i));
  }
  return std::string(line);
}

nlohmann::json parse_toml_value(const std::string& text, std::size_t line_no) {
  auto fail = [&](const std::string& what) -> nlohmann::json {
    throw ParseError(line_no, 1, what);
  };
  if (text.empty()) return fail("missing value");
  if (text.front() == '"') {
    if (text.size() < 2 || text.back() != '"') return fail("unterminated string");
    return text.substr(1, text.size() - 2);
  }
  // Numbers and arrays of numbers share JSON syntax.
  try {
    auto v = nlohmann::json::parse(text);
    if (v.is_number() || (v.is_array() && !v.empty())) return v;
  } catch (const nlohmann::json::exception&) {
  }
  return fail("unsupported value '" + text + "'");
}

nlohmann::json read_toml(const std::string& text) {
  nlohmann::json doc = nlohmann::json::object();
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty() || line.front() == '[') continue;  // section headers are cosmetic
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, 1, "expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    doc[key] = parse_toml_value(trim(std::string_view(line).substr(eq + 1)), line_no);
  }
  return doc;
}

std::array<double, 3> level_triplet(const nlohmann::json& v, const std::string& key) {
  if (!v.is_array() || v.size() != 3) {
    throw InvalidConfig(key + " must be an array of three factors (levels 1, 3, 5)");
  }
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

ModelConfig from_json(const nlohmann::json& top, const std::filesystem::path& origin) {
  const nlohmann::json& doc =
      top.contains("profile") && top["profile"].is_object() ? top["profile"] : top;
  ModelConfig cfg;
  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "voltage") cfg.profile.voltage_v = value.get<double>();
      else if (key == "i_tx") cfg.profile.i_tx_a = value.get<double>();
      else if (key == "i_rx") cfg.profile.i_rx_a = value.get<double>();
      else if (key == "i_ifs") cfg.profile.i_ifs_a = value.get<double>();
      else if (key == "i_mcu") cfg.profile.i_mcu_a = value.get<double>();
      else if (key == "f_mcu") cfg.profile.f_mcu_hz = value.get<double>();
      else if (key == "ifs_slots") cfg.ifs_slots = value.get<int>();
      else if (key == "gamma_comm") cfg.gamma.comm = value.get<double>();
      else if (key == "gamma_keygen") cfg.gamma.keygen = level_triplet(value, key);
      else if (key == "gamma_decap") cfg.gamma.decap = level_triplet(value, key);
      else if (key == "kem_backend") cfg.kem_backend = value.get<std::string>();
      else if (key == "cycles") {
        std::filesystem::path p = value.get<std::string>();
        if (p.is_relative()) p = origin.parent_path() / p;
        cfg.cycles_path = p;
      } else if (key == "provenance") {
        // informational
      } else {
        throw InvalidConfig("unknown config key '" + key + "' in " + origin.string());
      }
    } catch (const nlohmann::json::exception& e) {
      throw InvalidConfig("bad value for '" + key + "' in " + origin.string() + ": " +
                          e.what());
    }
  }
  cfg.profile.validate();
  cfg.gamma.validate();
  if (cfg.ifs_slots != 1 && cfg.ifs_slots != 2) {
    throw InvalidConfig("ifs_slots must be 1 or 2");
  }
  if (cfg.kem_backend != "stub" && cfg.kem_backend != "real") {
    throw InvalidConfig("kem_backend must be stub or real");
  }
  return cfg;
}

}  // namespace

CycleTable ModelConfig::load_cycles() const {
  return cycles_path ? CycleTable::from_file(*cycles_path) : CycleTable::builtin();
}

ModelConfig load_model_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();

  if (path.extension() == ".json") {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(1, e.byte, std::string("invalid JSON: ") + e.what());
    }
    return from_json(doc, path);
  }
  return from_json(read_toml(text), path);
}

ModelConfig resolve_model_config(
    const std::optional<std::filesystem::path>& explicit_path) {
  if (explicit_path) return load_model_config(*explicit_path);
  if (const char* env = std::getenv(kProfileEnvVar); env && *env) {
    return load_model_config(env);
  }
  return ModelConfig{};
}

}  // namespace pqpan
