#pragma once

#include <map>
#include <string>
#include <vector>

#include "bype/errors.hpp"

namespace bype::cfg {

// Flat `key = value` configuration with dotted keys. Values resolve as
// defaults <- file <- --set overrides; the fully resolved map is echoed into
// the run directory and reproduces the run when loaded back.
class Config {
  public:
    static Config defaults();
    static Config from_file(const std::string& path); // defaults + file

    void load_file(const std::string& path);
    void set(const std::string& key, const std::string& value);
    void apply_override(const std::string& key_eq_value); // "key=value"

    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    long get_long(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<std::string> get_list(const std::string& key) const; // comma split

    std::string resolved_text() const; // sorted `key = value` lines
    void write_resolved(const std::string& path) const;

  private:
    void check_known(const std::string& key) const;
    std::map<std::string, std::string> kv_;
};

} // namespace bype::cfg
