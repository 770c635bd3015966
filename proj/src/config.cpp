#include "trapwave/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Geometry>

namespace trapwave {
namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out)
{
    const std::string t = trim(s);
    if (t.empty()) return false;
    const char* end = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(t.data(), end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

bool parse_list(const std::string& s, std::vector<double>& out)
{
    out.clear();
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        double x = 0;
        if (!parse_double(item, x)) return false;
        out.push_back(x);
    }
    return !out.empty();
}

std::string join(const std::vector<double>& xs)
{
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + format_number(xs[i]);
    return s;
}

Vec3 to_vec3(const std::string& s)
{
    std::vector<double> xs;
    if (!parse_list(s, xs) || xs.size() != 3) throw std::invalid_argument("expected three comma-separated numbers, got '" + s + "'");
    return {xs[0], xs[1], xs[2]};
}

}  // namespace

std::string format_number(double x)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

Config Config::parse(const std::string& text, const std::string& source)
{
    Config c;
    c.source_ = source;
    std::stringstream ss(text);
    std::string raw;
    int line = 0;
    while (std::getline(ss, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError(source + ":" + std::to_string(line) + ": expected 'key = value', got '" + body + "'");
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (key.empty()) throw ConfigError(source + ":" + std::to_string(line) + ": empty key");
        if (c.entries_.count(key))
            throw ConfigError(source + ":" + std::to_string(line) + ": " + key + ": duplicate key (first on line " +
                              std::to_string(c.entries_[key].line) + ")");
        c.entries_[key] = {value, line};
    }
    return c;
}

Config Config::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
}

void Config::set(const std::string& key, const std::string& value) { entries_[key] = {value, 0}; }

const Config::Entry* Config::find(const std::string& key) const
{
    const auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

void Config::use(const std::string& key, const std::string& value) const
{
    used_.insert(key);
    resolved_[key] = value;
}

void Config::fail(const std::string& key, const std::string& message) const
{
    const Entry* e = find(key);
    std::string where = source_;
    if (e && e->line > 0) where += ":" + std::to_string(e->line);
    else if (e) where = "command line";
    throw ConfigError(where + ": " + key + ": " + message);
}

std::string Config::text(const std::string& key) const
{
    const Entry* e = find(key);
    if (!e) throw ConfigError(source_ + ": " + key + ": required key missing");
    use(key, e->value);
    return e->value;
}

std::string Config::text(const std::string& key, const std::string& fallback) const
{
    const Entry* e = find(key);
    const std::string v = e ? e->value : fallback;
    use(key, v);
    return v;
}

double Config::number(const std::string& key) const
{
    const std::string s = text(key);
    double x = 0;
    if (!parse_double(s, x)) fail(key, "expected a number, got '" + s + "'");
    use(key, format_number(x));
    return x;
}

double Config::number(const std::string& key, double fallback) const
{
    if (!has(key)) {
        use(key, format_number(fallback));
        return fallback;
    }
    return number(key);
}

double Config::number_in(const std::string& key, double fallback, double lo, double hi) const
{
    const double x = number(key, fallback);
    if (!(x >= lo && x <= hi)) fail(key, "value " + format_number(x) + " outside [" + format_number(lo) + ", " + format_number(hi) + "]");
    return x;
}

std::int64_t Config::integer(const std::string& key, std::int64_t fallback, std::int64_t lo, std::int64_t hi) const
{
    std::int64_t x = fallback;
    if (const Entry* e = find(key)) {
        const std::string t = trim(e->value);
        double d = 0;
        // Accept 1e5 style as long as the value is integral.
        if (!parse_double(t, d) || d != std::floor(d) || std::abs(d) > 9.0e15)
            fail(key, "expected an integer, got '" + t + "'");
        x = static_cast<std::int64_t>(d);
    }
    use(key, std::to_string(x));
    if (x < lo || x > hi) fail(key, "value " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return x;
}

std::uint64_t Config::seed(std::uint64_t fallback) const
{
    std::uint64_t x = fallback;
    if (const Entry* e = find("seed")) {
        const std::string t = trim(e->value);
        auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
        if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) fail("seed", "expected a non-negative integer, got '" + t + "'");
    }
    use("seed", std::to_string(x));
    return x;
}

bool Config::flag(const std::string& key, bool fallback) const
{
    bool x = fallback;
    if (const Entry* e = find(key)) {
        if (e->value == "true" || e->value == "1") x = true;
        else if (e->value == "false" || e->value == "0") x = false;
        else fail(key, "expected true or false, got '" + e->value + "'");
    }
    use(key, x ? "true" : "false");
    return x;
}

Vec3 Config::vec3(const std::string& key) const
{
    const std::string s = text(key);
    try {
        const Vec3 v = to_vec3(s);
        use(key, join({v[0], v[1], v[2]}));
        return v;
    } catch (const std::invalid_argument& e) {
        fail(key, e.what());
    }
}

Vec3 Config::vec3(const std::string& key, const Vec3& fallback) const
{
    if (!has(key)) {
        use(key, join({fallback[0], fallback[1], fallback[2]}));
        return fallback;
    }
    return vec3(key);
}

std::vector<double> Config::list(const std::string& key) const
{
    const std::string s = text(key);
    std::vector<double> xs;
    if (!parse_list(s, xs)) fail(key, "expected a comma-separated list of numbers, got '" + s + "'");
    use(key, join(xs));
    return xs;
}

std::vector<double> Config::list(const std::string& key, const std::vector<double>& fallback) const
{
    if (!has(key)) {
        use(key, join(fallback));
        return fallback;
    }
    return list(key);
}

std::string Config::choice(const std::string& key, const std::string& fallback, const std::vector<std::string>& choices) const
{
    const std::string v = text(key, fallback);
    for (const auto& c : choices)
        if (c == v) return v;
    std::string all;
    for (const auto& c : choices) all += (all.empty() ? "" : ", ") + c;
    fail(key, "expected one of " + all + ", got '" + v + "'");
}

Scene Config::scene() const
{
    std::vector<Body> bodies;
    for (const char* key : {"body1", "body2"}) {
        if (!has(key)) continue;
        try {
            bodies.push_back(parse_body(text(key)));
        } catch (const std::invalid_argument& e) {
            fail(key, e.what());
        }
    }
    if (bodies.empty()) return Scene::empty();
    if (bodies.size() == 1) return Scene::single(bodies[0]);
    try {
        return Scene::pair(bodies[0], bodies[1]);
    } catch (const std::invalid_argument& e) {
        fail("body2", e.what());
    }
}

void Config::finish() const
{
    const Entry* first = nullptr;
    std::string name;
    for (const auto& [key, entry] : entries_) {
        if (used_.count(key)) continue;
        if (!first || entry.line < first->line) {
            first = &entry;
            name = key;
        }
    }
    if (first) fail(name, "unknown key for this experiment");
}

Body parse_body(const std::string& descriptor)
{
    std::stringstream ss(descriptor);
    std::string kind;
    ss >> kind;
    std::map<std::string, std::string> args;
    std::string tok;
    while (ss >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("expected name=value, got '" + tok + "'");
        if (!args.emplace(tok.substr(0, eq), tok.substr(eq + 1)).second)
            throw std::invalid_argument("repeated body argument '" + tok.substr(0, eq) + "'");
    }
    auto take = [&](const std::string& name) {
        const auto it = args.find(name);
        if (it == args.end()) throw std::invalid_argument(kind + " needs " + name + "=");
        std::string v = it->second;
        args.erase(it);
        return v;
    };
    auto positive = [](double x, const char* what) {
        if (!(x > 0)) throw std::invalid_argument(std::string(what) + " must be positive");
        return x;
    };
    const Vec3 center = to_vec3(take("center"));
    Mat3 rotation = Mat3::Identity();
    if (kind != "ball" && (args.count("axis") || args.count("angle"))) {
        const Vec3 axis = to_vec3(take("axis"));
        double deg = 0;
        if (!parse_double(take("angle"), deg)) throw std::invalid_argument("angle must be a number of degrees");
        if (!(axis.norm() > 0)) throw std::invalid_argument("rotation axis must be non-zero");
        rotation = Eigen::AngleAxisd(deg * std::numbers::pi / 180, axis.normalized()).toRotationMatrix();
    }
    Body body = [&] {
        if (kind == "ball") {
            double r = 0;
            if (!parse_double(take("radius"), r)) throw std::invalid_argument("radius must be a number");
            return Body::ball(center, positive(r, "radius"));
        }
        if (kind == "ellipsoid" || kind == "superellipsoid") {
            const Vec3 a = to_vec3(take("semiaxes"));
            if (!(a.minCoeff() > 0)) throw std::invalid_argument("semiaxes must be positive");
            if (kind == "ellipsoid") return Body::ellipsoid(center, a, rotation);
            double p = 0;
            if (!parse_double(take("exponent"), p) || p != std::floor(p)) throw std::invalid_argument("exponent must be an even integer");
            return Body::superellipsoid(center, a, static_cast<int>(p), rotation);
        }
        throw std::invalid_argument("unknown body kind '" + kind + "' (ball, ellipsoid, superellipsoid)");
    }();
    if (!args.empty()) throw std::invalid_argument("unknown body argument '" + args.begin()->first + "'");
    return body;
}

}  // namespace trapwave
