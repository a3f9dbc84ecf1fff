#ifndef LINKSIM_CONFIG_HPP
#define LINKSIM_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "linksim/errors.hpp"

namespace linksim::cli {

// Flat key=value configuration with dotted keys. A file may use [section]
// headers (prefixing the keys that follow) or write the dotted keys
// directly; '#' and ';' start comments. Every key is checked against the
// registry: unknown keys, bad types and out-of-range values are rejected at
// load time.
class RunConfig {
public:
    RunConfig(); // all defaults

    static RunConfig from_file(const std::string& path);
    static RunConfig from_text(const std::string& text);

    void set(const std::string& key, const std::string& value);

    bool is_default(const std::string& key) const;
    double real(const std::string& key) const;
    std::int64_t integer(const std::string& key) const;
    std::string text(const std::string& key) const;
    std::vector<double> real_list(const std::string& key) const;

    // sorted "key = value" lines; the canonical form used for hashing and
    // for echoing inputs into result documents
    std::string canonical_text() const;
    std::uint64_t hash() const;

    const std::map<std::string, std::string>& entries() const { return values_; }

    // one line per registry key: "key  default  description"
    static std::string key_reference();

private:
    std::map<std::string, std::string> values_; // raw text per key
};

std::uint64_t fnv1a64(const std::string& data);

} // namespace linksim::cli

#endif
