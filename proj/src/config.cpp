#include "kwc/config.hpp"

#include "kwc/errors.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>

namespace kwc {

namespace {

std::string trim(const std::string& s)
{
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos)
        return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double to_number(const std::string& key, const std::string& raw)
{
    const std::string s = trim(raw);
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ConfigError("config: " + key + " = '" + raw + "' is not a number");
    }
    if (used != s.size())
        throw ConfigError("config: " + key + " = '" + raw + "' is not a number");
    return x;
}

std::pair<std::vector<double>, std::vector<double>> read_columns(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config: cannot open table " + path);
    std::vector<double> a, b;
    std::string line;
    while (std::getline(in, line)) {
        line = line.substr(0, line.find('#'));
        std::istringstream ss(line);
        double x = 0.0, y = 0.0;
        if (!(ss >> x))
            continue;
        if (!(ss >> y))
            throw ConfigError("config: table line needs two columns: " + line);
        a.push_back(x);
        b.push_back(y);
    }
    return {a, b};
}

} // namespace

Config Config::load(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    Config cfg = parse(ss.str());
    cfg.base_dir_ = std::filesystem::absolute(path).parent_path().string();
    return cfg;
}

Config Config::parse(const std::string& text)
{
    Config cfg;
    cfg.source_ = text;
    std::istringstream in(text);
    try {
        boost::property_tree::ini_parser::read_ini(in, cfg.tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    cfg.base_dir_ = std::filesystem::current_path().string();
    return cfg;
}

bool Config::has(const std::string& key) const { return static_cast<bool>(tree_.get_optional<std::string>(key)); }

std::string Config::text(const std::string& key) const
{
    const auto v = tree_.get_optional<std::string>(key);
    if (!v)
        throw ConfigError("config: missing " + key);
    return trim(*v);
}

std::string Config::text(const std::string& key, const std::string& fallback) const
{
    return has(key) ? text(key) : fallback;
}

double Config::number(const std::string& key) const { return to_number(key, text(key)); }

double Config::number(const std::string& key, double fallback) const
{
    return has(key) ? number(key) : fallback;
}

std::size_t Config::count(const std::string& key) const
{
    const double x = number(key);
    if (!(x >= 0.0) || x != std::floor(x) || x > 1e15)
        throw ConfigError("config: " + key + " must be a non-negative integer");
    return static_cast<std::size_t>(x);
}

std::size_t Config::count(const std::string& key, std::size_t fallback) const
{
    return has(key) ? count(key) : fallback;
}

std::vector<double> Config::numbers(const std::string& key) const
{
    std::vector<double> out;
    std::istringstream ss(text(key));
    std::string item;
    while (std::getline(ss, item, ','))
        if (!trim(item).empty())
            out.push_back(to_number(key, item));
    if (out.empty())
        throw ConfigError("config: " + key + " is an empty list");
    return out;
}

std::vector<double> Config::numbers(const std::string& key, std::vector<double> fallback) const
{
    return has(key) ? numbers(key) : fallback;
}

std::string Config::hash() const
{
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(source_);
    return os.str();
}

std::string Config::resolve(const std::string& path) const
{
    const std::filesystem::path p(path);
    return p.is_absolute() ? path : (std::filesystem::path(base_dir_) / p).string();
}

std::uint64_t fnv1a(const std::string& bytes)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

PotentialSpec potential_from(const Config& cfg)
{
    const std::string kind = cfg.text("potential.kind", "quadratic");
    if (kind == "quadratic")
        return PotentialSpec::quadratic();
    if (kind == "quartic")
        return PotentialSpec::quartic();
    if (kind == "table") {
        auto [v, f] = read_columns(cfg.resolve(cfg.text("potential.file")));
        try {
            return PotentialSpec::tabulated(std::move(v), std::move(f));
        } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("config: potential table: ") + e.what());
        }
    }
    throw ConfigError("config: unknown potential.kind '" + kind + "'");
}

WeightSpec weight_from(const Config& cfg)
{
    const std::string kind = cfg.text("weight.kind", "quadratic");
    if (kind == "quadratic")
        return WeightSpec::quadratic();
    if (kind == "shifted") {
        const double c = cfg.number("weight.shift");
        if (!(c >= 0.0))
            throw ConfigError("config: weight.shift must be non-negative");
        return WeightSpec::shifted(c);
    }
    if (kind == "table") {
        auto [v, a] = read_columns(cfg.resolve(cfg.text("weight.file")));
        try {
            return WeightSpec::tabulated(std::move(v), std::move(a));
        } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("config: weight table: ") + e.what());
        }
    }
    throw ConfigError("config: unknown weight.kind '" + kind + "'");
}

void write_metadata(std::ostream& os, const Config& cfg, const std::string& command,
                    std::optional<std::uint64_t> seed)
{
    os << "# kwc " << kToolVersion << '\n' << "# command: " << command << '\n' << "# config_hash: " << cfg.hash() << '\n';
    if (seed)
        os << "# seed: " << *seed << '\n';
}

} // namespace kwc
