#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pilesort {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat `key = value` text; '#' starts a comment, blank lines are ignored.
/// Every key must be read before finish(), otherwise finish() reports the
/// first unknown key.
class ConfigReader {
 public:
  static ConfigReader parse(std::string_view text);
  static ConfigReader load(const std::string& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  double get(const std::string& key, double fallback);
  int get(const std::string& key, int fallback);
  std::uint64_t get(const std::string& key, std::uint64_t fallback);
  bool get(const std::string& key, bool fallback);
  std::string get(const std::string& key, const std::string& fallback);

  void finish() const;

 private:
  const std::string* take(const std::string& key);

  std::map<std::string, std::string> entries_;
  std::map<std::string, int> lines_;
  std::set<std::string> used_;
};

}  // namespace pilesort
