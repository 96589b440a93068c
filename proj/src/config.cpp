#include "pilesort/config.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace pilesort {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

ConfigReader ConfigReader::parse(std::string_view text) {
  ConfigReader cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    }
    if (cfg.entries_.count(key)) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": duplicate key '" + key + "'");
    }
    cfg.entries_[key] = value;
    cfg.lines_[key] = line_no;
  }
  return cfg;
}

ConfigReader ConfigReader::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const std::string* ConfigReader::take(const std::string& key) {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return nullptr;
  used_.insert(key);
  return &it->second;
}

double ConfigReader::get(const std::string& key, double fallback) {
  const std::string* v = take(key);
  if (!v) return fallback;
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc{} || ptr != v->data() + v->size()) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + *v + "'");
  }
  return out;
}

int ConfigReader::get(const std::string& key, int fallback) {
  const std::string* v = take(key);
  if (!v) return fallback;
  int out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc{} || ptr != v->data() + v->size()) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + *v + "'");
  }
  return out;
}

std::uint64_t ConfigReader::get(const std::string& key, std::uint64_t fallback) {
  const std::string* v = take(key);
  if (!v) return fallback;
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc{} || ptr != v->data() + v->size()) {
    throw ConfigError("config key '" + key + "': expected an unsigned integer, got '" +
                      *v + "'");
  }
  return out;
}

bool ConfigReader::get(const std::string& key, bool fallback) {
  const std::string* v = take(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + *v + "'");
}

std::string ConfigReader::get(const std::string& key, const std::string& fallback) {
  const std::string* v = take(key);
  return v ? *v : fallback;
}

void ConfigReader::finish() const {
  for (const auto& [key, value] : entries_) {
    if (!used_.count(key)) {
      throw ConfigError("config line " + std::to_string(lines_.at(key)) +
                        ": unknown key '" + key + "'");
    }
  }
}

}  // namespace pilesort
