#include "sgp_app/config_file.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "sgp/errors.hpp"

namespace sgp::app {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) {
    ++b;
  }
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) {
    --e;
  }
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) {
      break;
    }
    start = pos + 1;
  }
  return out;
}

std::optional<double> parse_real(std::string_view token) {
  if (!token.empty() && token.front() == '+') {
    token.remove_prefix(1);
  }
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (token.empty() || ec != std::errc() || ptr != token.data() + token.size()) {
    return std::nullopt;
  }
  return v;
}

ConfigFile ConfigFile::parse(std::string_view text, std::string origin) {
  ConfigFile cfg;
  cfg.text_ = std::string(text);
  cfg.origin_ = std::move(origin);
  auto error = [&](int line, const std::string& msg) {
    return ConfigError(cfg.origin_ + ":" + std::to_string(line) + ": " + msg);
  };
  std::istringstream in(cfg.text_);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string content = trim(std::string_view(raw).substr(0, raw.find('#')));
    if (content.empty()) {
      continue;
    }
    if (content.front() == '[') {
      if (content.back() != ']') {
        throw error(line, "unterminated section header");
      }
      section = trim(std::string_view(content).substr(1, content.size() - 2));
      if (section.empty()) {
        throw error(line, "empty section name");
      }
      if (cfg.section_lines_.count(section)) {
        throw error(line, "section [" + section + "] repeated");
      }
      cfg.section_lines_[section] = line;
      cfg.sections_[section];
      continue;
    }
    const std::size_t eq = content.find('=');
    if (eq == std::string::npos) {
      throw error(line, "expected 'key = value'");
    }
    if (section.empty()) {
      throw error(line, "key outside of any section");
    }
    const std::string key = trim(std::string_view(content).substr(0, eq));
    const std::string value = trim(std::string_view(content).substr(eq + 1));
    if (key.empty()) {
      throw error(line, "empty key");
    }
    if (value.empty()) {
      throw error(line, "key '" + key + "' has no value");
    }
    auto& keys = cfg.sections_[section];
    if (keys.count(key)) {
      throw error(line, "key '" + key + "' repeated in [" + section + "]");
    }
    keys[key] = Entry{value, line};
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file '" + path + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

const ConfigFile::Entry* ConfigFile::find(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) {
    return nullptr;
  }
  const auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

void ConfigFile::check_schema(const Schema& schema) const {
  for (const auto& [section, keys] : sections_) {
    const auto allowed = schema.find(section);
    if (allowed == schema.end()) {
      throw ConfigError(origin_ + ":" + std::to_string(section_lines_.at(section)) + ": unknown section [" +
                        section + "]");
    }
    for (const auto& [key, entry] : keys) {
      if (!allowed->second.count(key)) {
        throw ConfigError(origin_ + ":" + std::to_string(entry.line) + ": unknown key '" + key + "' in [" +
                          section + "]");
      }
    }
  }
}

void ConfigFile::fail(const std::string& section, const std::string& key, const std::string& message) const {
  const Entry* e = find(section, key);
  const std::string where = e ? origin_ + ":" + std::to_string(e->line) : origin_;
  throw ConfigError(where + ": [" + section + "] " + key + ": " + message);
}

std::optional<std::string> ConfigFile::string(const std::string& section, const std::string& key) const {
  const Entry* e = find(section, key);
  if (!e) {
    return std::nullopt;
  }
  return e->value;
}

std::optional<double> ConfigFile::real(const std::string& section, const std::string& key) const {
  const Entry* e = find(section, key);
  if (!e) {
    return std::nullopt;
  }
  const auto v = parse_real(e->value);
  if (!v) {
    fail(section, key, "expected a number, got '" + e->value + "'");
  }
  return v;
}

std::optional<std::uint64_t> ConfigFile::unsigned_integer(const std::string& section,
                                                          const std::string& key) const {
  const Entry* e = find(section, key);
  if (!e) {
    return std::nullopt;
  }
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
  if (ec != std::errc() || ptr != e->value.data() + e->value.size()) {
    fail(section, key, "expected a non-negative integer, got '" + e->value + "'");
  }
  return v;
}

std::optional<std::vector<double>> ConfigFile::reals(const std::string& section, const std::string& key) const {
  const Entry* e = find(section, key);
  if (!e) {
    return std::nullopt;
  }
  std::vector<double> out;
  for (const auto& token : split(e->value, ',')) {
    const auto v = parse_real(token);
    if (!v) {
      fail(section, key, "expected a comma-separated list of numbers, got '" + token + "'");
    }
    out.push_back(*v);
  }
  return out;
}

std::optional<std::vector<std::string>> ConfigFile::strings(const std::string& section,
                                                            const std::string& key) const {
  const Entry* e = find(section, key);
  if (!e) {
    return std::nullopt;
  }
  auto out = split(e->value, ',');
  for (const auto& token : out) {
    if (token.empty()) {
      fail(section, key, "empty list element");
    }
  }
  return out;
}

} // namespace sgp::app
