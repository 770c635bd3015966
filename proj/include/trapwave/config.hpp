#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "trapwave/geometry.hpp"

namespace trapwave {

//! Malformed or out-of-range configuration. Not a domain Error: the CLI exits with 2.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/*!
 * Parsed `key = value` file.
 *
 * Lines are trimmed; `#` starts a comment; blank lines are skipped. Keys are
 * unique. Typed getters record which keys were consumed and the value that
 * was used (defaults included), so that finish() can reject unknown keys
 * and resolved() can echo the complete configuration.
 */
class Config {
  public:
    static Config parse(const std::string& text, const std::string& source = "<string>");
    static Config load(const std::string& path);

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    //! Replace or add a value (command-line overrides); line 0 marks it as not from the file.
    void set(const std::string& key, const std::string& value);

    std::string text(const std::string& key) const;
    std::string text(const std::string& key, const std::string& fallback) const;
    double number(const std::string& key) const;
    double number(const std::string& key, double fallback) const;
    //! Number in [lo, hi].
    double number_in(const std::string& key, double fallback, double lo, double hi) const;
    std::int64_t integer(const std::string& key, std::int64_t fallback, std::int64_t lo, std::int64_t hi) const;
    std::uint64_t seed(std::uint64_t fallback) const;
    bool flag(const std::string& key, bool fallback) const;
    Vec3 vec3(const std::string& key) const;
    Vec3 vec3(const std::string& key, const Vec3& fallback) const;
    std::vector<double> list(const std::string& key) const;
    std::vector<double> list(const std::string& key, const std::vector<double>& fallback) const;
    //! One of `choices`.
    std::string choice(const std::string& key, const std::string& fallback, const std::vector<std::string>& choices) const;

    //! body1 / body2 descriptors; the scene is empty when neither is given.
    Scene scene() const;

    //! Throws ConfigError naming the first key that no getter consumed.
    void finish() const;

    //! Every consumed key with the value in effect, sorted by key.
    const std::map<std::string, std::string>& resolved() const { return resolved_; }

    //! "source:line: key: message"
    [[noreturn]] void fail(const std::string& key, const std::string& message) const;

  private:
    struct Entry {
        std::string value;
        int line = 0;
    };
    const Entry* find(const std::string& key) const;
    void use(const std::string& key, const std::string& value) const;

    std::string source_;
    std::map<std::string, Entry> entries_;
    mutable std::set<std::string> used_;
    mutable std::map<std::string, std::string> resolved_;
};

/*!
 * Body descriptor grammar:
 *   ball center=X,Y,Z radius=R
 *   ellipsoid center=X,Y,Z semiaxes=A,B,C [axis=X,Y,Z angle=DEG]
 *   superellipsoid center=X,Y,Z semiaxes=A,B,C exponent=P [axis=X,Y,Z angle=DEG]
 * Throws std::invalid_argument on malformed descriptors.
 */
Body parse_body(const std::string& descriptor);

//! Shortest decimal form that reads back to the same double.
std::string format_number(double x);

}  // namespace trapwave
