#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace polaron {

enum class ValueKind { real, integer, real_or_auto, integer_or_auto, real_list, real_list_or_auto, flag, choice, text };

struct ConfigKey {
  std::string key;  // section.name
  std::string fallback;
  ValueKind kind;
  std::string doc;
  std::vector<std::string> choices;
};

const std::vector<ConfigKey>& config_schema();

// Flat sectioned key = value configuration. Every key has a default; unknown
// keys and unparsable values raise ConfigError naming the key.
class RunConfig {
 public:
  static RunConfig defaults();
  // INI file, or a manifest.json whose "config" object is replayed
  static RunConfig from_file(const std::string& path);

  void set(const std::string& key, const std::string& value);
  // "section.key=value"
  void set_assignment(const std::string& assignment);

  const std::string& str(const std::string& key) const;
  double real(const std::string& key) const;
  int integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  bool is_auto(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;

  // parses every value against its kind
  void validate() const;

  // sorted "[section]" blocks of "key = value" lines, run.out left out
  std::string canonical() const;
  // git blob SHA-1 of canonical()
  std::string hash() const;
  nlohmann::json to_json() const;

 private:
  std::map<std::string, std::string> values_;
};

std::string git_blob_sha1(const std::string& content);

}  // namespace polaron
