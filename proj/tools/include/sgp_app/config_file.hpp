#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace sgp::app {

/// Sectioned key = value text. '#' starts a comment; list values are
/// comma-separated. Every lookup error names the origin and line.
class ConfigFile {
public:
  struct Entry {
    std::string value;
    int line = 0;
  };
  using Schema = std::map<std::string, std::set<std::string>>;

  static ConfigFile parse(std::string_view text, std::string origin);
  static ConfigFile load(const std::string& path);

  const std::string& text() const noexcept { return text_; }
  const std::string& origin() const noexcept { return origin_; }

  bool has(const std::string& section, const std::string& key) const;
  /// Sections and keys outside `schema` are errors.
  void check_schema(const Schema& schema) const;

  std::optional<std::string> string(const std::string& section, const std::string& key) const;
  std::optional<double> real(const std::string& section, const std::string& key) const;
  std::optional<std::uint64_t> unsigned_integer(const std::string& section, const std::string& key) const;
  std::optional<std::vector<double>> reals(const std::string& section, const std::string& key) const;
  std::optional<std::vector<std::string>> strings(const std::string& section, const std::string& key) const;

  /// "origin:line: message" for the given key, or "origin: message" if absent.
  [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& message) const;

private:
  const Entry* find(const std::string& section, const std::string& key) const;

  std::string text_;
  std::string origin_;
  std::map<std::string, std::map<std::string, Entry>> sections_;
  std::map<std::string, int> section_lines_;
};

/// Locale-independent parse of a whole token; nullopt on trailing junk.
std::optional<double> parse_real(std::string_view token);
std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

} // namespace sgp::app
