#include "lunes/keyvalue.hpp"

#include <charconv>
#include <sstream>

#include "lunes/errors.hpp"

namespace lunes::kv {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' ||
                        s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

}  // namespace

Map parse(std::istream& in) {
  Map out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view v = trim(line);
    if (v.empty() || v.front() == '#') continue;
    auto eq = v.find('=');
    if (eq == std::string_view::npos)
      throw ParseError("expected key=value", lineno);
    std::string_view key = trim(v.substr(0, eq));
    std::string_view val = trim(v.substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", lineno);
    out.emplace_back(std::string(key), std::string(val));
  }
  return out;
}

Map parse_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse(in);
}

std::optional<std::string> try_get(const Map& m, std::string_view key) {
  // last occurrence wins, so later sources can simply append overrides
  std::optional<std::string> found;
  for (const auto& [k, v] : m)
    if (k == key) found = v;
  return found;
}

std::string get(const Map& m, std::string_view key) {
  auto v = try_get(m, key);
  if (!v) throw ConfigError("missing key: " + std::string(key));
  return *v;
}

void set(Map& m, std::string_view key, std::string_view value) {
  for (auto& [k, v] : m) {
    if (k == key) {
      v = std::string(value);
      return;
    }
  }
  m.emplace_back(std::string(key), std::string(value));
}

std::uint64_t get_u64(const Map& m, std::string_view key) {
  std::string s = get(m, key);
  std::uint64_t value = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ConfigError("key " + std::string(key) + ": not an integer: " + s);
  return value;
}

double get_double(const Map& m, std::string_view key) {
  std::string s = get(m, key);
  try {
    std::size_t pos = 0;
    double value = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return value;
  } catch (const std::exception&) {
    throw ConfigError("key " + std::string(key) + ": not a number: " + s);
  }
}

void write(std::ostream& out, const Map& m) {
  for (const auto& [k, v] : m) out << k << '=' << v << '\n';
}

}  // namespace lunes::kv
