#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lunes::kv {

// Flat `key=value` text used by config files, corpus manifests, stats files
// and trace headers. Order-preserving so writes are byte-stable.
using Map = std::vector<std::pair<std::string, std::string>>;

Map parse(std::istream& in);
Map parse_string(std::string_view text);

std::optional<std::string> try_get(const Map& m, std::string_view key);
std::string get(const Map& m, std::string_view key);  // throws ConfigError
void set(Map& m, std::string_view key, std::string_view value);

std::uint64_t get_u64(const Map& m, std::string_view key);
double get_double(const Map& m, std::string_view key);

void write(std::ostream& out, const Map& m);

}  // namespace lunes::kv
