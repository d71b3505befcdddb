#pragma once

#include "kwc/potential.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>

namespace kwc {

inline constexpr const char* kToolVersion = "0.3.0";

// Missing file, unparsable value or incomplete block.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Experiment configuration: INI sections of key = value lines.
///
/// Keys are addressed as "section.key". Lists are comma separated.
class Config {
public:
    static Config load(const std::string& path);
    static Config parse(const std::string& text);

    bool has(const std::string& key) const;
    std::string text(const std::string& key) const;
    std::string text(const std::string& key, const std::string& fallback) const;
    double number(const std::string& key) const;
    double number(const std::string& key, double fallback) const;
    std::size_t count(const std::string& key) const;
    std::size_t count(const std::string& key, std::size_t fallback) const;
    std::vector<double> numbers(const std::string& key) const;
    std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const;

    // FNV-1a of the file contents, 16 hex digits.
    std::string hash() const;
    const std::string& source() const noexcept { return source_; }
    // Directory of the config file, for resolving relative paths.
    const std::string& base_dir() const noexcept { return base_dir_; }
    std::string resolve(const std::string& path) const;

private:
    boost::property_tree::ptree tree_;
    std::string source_;
    std::string base_dir_;
};

std::uint64_t fnv1a(const std::string& bytes);

/// [potential] kind = quadratic | quartic | table (with file = two-column text).
PotentialSpec potential_from(const Config& cfg);
/// [weight] kind = quadratic | shifted (with shift) | table (with file).
WeightSpec weight_from(const Config& cfg);

/// Comment block heading every CSV: tool version, command, config hash, seed.
void write_metadata(std::ostream& os, const Config& cfg, const std::string& command,
                    std::optional<std::uint64_t> seed);

} // namespace kwc
