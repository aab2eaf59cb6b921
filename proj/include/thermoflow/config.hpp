#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "thermoflow/state.hpp"

namespace thermoflow {

/// Analytic initial-data expression: a constant plus a sum of terms
/// c * prod sin/cos(k pi x_a). Coordinates are physical (x, y, z).
class Expression {
public:
    struct Factor {
        bool is_sin = false;
        double k = 0;
        int axis = 0;
    };
    struct Term {
        double coefficient = 1;
        std::vector<Factor> factors;
    };

    static Expression parse(std::string_view text, int dim);

    double operator()(const std::array<double, 3>& x) const;
    double constant() const noexcept { return constant_; }
    const std::vector<Term>& terms() const noexcept { return terms_; }
    bool is_zero() const noexcept { return constant_ == 0 && terms_.empty(); }

private:
    double constant_ = 0;
    std::vector<Term> terms_;
};

struct ConfigEntry {
    std::string key;
    std::string value;
    int line = 0;  // 0 for preset defaults and command-line overrides
};

/// Everything a run needs: grid, initial state, integrator settings.
struct RunConfig {
    Grid<double> grid;
    State<double> initial;
    SimConfig sim;
    std::uint64_t seed = 0;
    long snapshot_every = 0;  // 0 writes only the final snapshot
    std::string preset;
    std::vector<ConfigEntry> entries;  // effective key/value pairs, sorted by key
};

using ConfigOverrides = std::vector<std::pair<std::string, std::string>>;

/// Parses the line-based `key = value` format. `#` starts a comment.
/// Overrides replace (or add) keys after the text is read.
RunConfig parse_config(std::string_view text, const ConfigOverrides& overrides = {});
RunConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

/// The 1D reference scenario: N = 257, mu = 1, v0 = 0.2 sin(pi x),
/// theta0 = 1 + 0.3 cos(pi x), dt = 1e-3, t_end = 200.
RunConfig reference_config(const ConfigOverrides& overrides = {});

/// Normalised `key = value` text for every effective key.
std::string render_config(const RunConfig& cfg);

const std::vector<std::string>& config_keys();

}  // namespace thermoflow
