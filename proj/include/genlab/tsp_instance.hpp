#pragma once

/// @file tsp_instance.hpp
/// @brief TSPLIB parsing, canonical tours and tour length evaluation.
///
/// Supported weight kinds are EUC_2D (rounded Euclidean), GEO (TSPLIB
/// geographical distance) and EXPLICIT with FULL_MATRIX, UPPER_ROW or
/// LOWER_DIAG_ROW layouts. Everything else is rejected with a ParseError
/// naming the offending keyword.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <genlab/rng.hpp>

namespace genlab {

class ParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class WeightKind { Euc2D, Geo, Explicit };

/// A symmetric TSP instance with a materialized distance matrix.
struct TspInstance {
    std::string name;
    std::size_t n = 0;
    WeightKind weight_kind = WeightKind::Euc2D;
    std::vector<std::pair<double, double>> coords; // empty for EXPLICIT
    std::vector<double> dist;                      // row-major n*n

    double distance(std::size_t a, std::size_t b) const noexcept { return dist[a * n + b]; }
};

/// Hamiltonian cycle with city 0 fixed at position 0.
struct Tour {
    std::vector<int> cities;

    std::size_t size() const noexcept { return cities.size(); }
    int operator[](std::size_t k) const noexcept { return cities[k]; }
    bool operator==(const Tour&) const = default;
};

struct TourHash {
    std::size_t operator()(const Tour& t) const noexcept {
        std::uint64_t h = 1469598103934665603ULL;
        for (int c : t.cities) {
            h ^= static_cast<std::uint64_t>(c);
            h *= 1099511628211ULL;
        }
        return static_cast<std::size_t>(h);
    }
};

inline bool is_valid_tour(const Tour& t, std::size_t n) {
    if (t.size() != n || n == 0 || t.cities[0] != 0) {
        return false;
    }
    std::vector<char> seen(n, 0);
    for (int c : t.cities) {
        if (c < 0 || static_cast<std::size_t>(c) >= n || seen[c]) {
            return false;
        }
        seen[c] = 1;
    }
    return true;
}

/// Sum of edge weights along the cycle, including the closing edge.
inline double tour_length(const TspInstance& inst, const Tour& t) {
    double total = 0.0;
    const std::size_t n = t.size();
    for (std::size_t k = 0; k + 1 < n; ++k) {
        total += inst.distance(t.cities[k], t.cities[k + 1]);
    }
    if (n > 1) {
        total += inst.distance(t.cities[n - 1], t.cities[0]);
    }
    return total;
}

/// Same cycle traversed the other way: position 0 is kept, the rest reversed.
inline Tour reverse_tour(const Tour& t) {
    Tour r = t;
    if (r.size() > 1) {
        std::reverse(r.cities.begin() + 1, r.cities.end());
    }
    return r;
}

/// Rotates an arbitrary city sequence so that city 0 comes first.
inline Tour canonicalize(std::vector<int> cycle) {
    auto zero = std::find(cycle.begin(), cycle.end(), 0);
    std::rotate(cycle.begin(), zero, cycle.end());
    return Tour{std::move(cycle)};
}

inline Tour random_tour(std::size_t n, Rng& rng) {
    if (n < 3) {
        throw std::invalid_argument("random_tour: n must be at least 3");
    }
    Tour t;
    t.cities.resize(n);
    std::iota(t.cities.begin(), t.cities.end(), 0);
    std::shuffle(t.cities.begin() + 1, t.cities.end(), rng);
    return t;
}

namespace detail {

inline std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string upper(std::string s) {
    for (auto& ch : s) {
        ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    }
    return s;
}

inline bool starts_section_or_keyword(const std::string& line) {
    return !line.empty() && std::isalpha(static_cast<unsigned char>(line[0]));
}

inline double nint(double x) { return std::floor(x + 0.5); }

// TSPLIB GEO: DDD.MM coordinates, truncated degrees.
inline double geo_radians(double v) {
    constexpr double pi = 3.141592;
    const double deg = std::trunc(v);
    const double min = v - deg;
    return pi * (deg + 5.0 * min / 3.0) / 180.0;
}

inline double geo_distance(std::pair<double, double> a, std::pair<double, double> b) {
    constexpr double rrr = 6378.388;
    const double lat_a = geo_radians(a.first), lon_a = geo_radians(a.second);
    const double lat_b = geo_radians(b.first), lon_b = geo_radians(b.second);
    const double q1 = std::cos(lon_a - lon_b);
    const double q2 = std::cos(lat_a - lat_b);
    const double q3 = std::cos(lat_a + lat_b);
    return std::trunc(rrr * std::acos(0.5 * ((1.0 + q1) * q2 - (1.0 - q1) * q3)) + 1.0);
}

} // namespace detail

/// Parses TSPLIB text for TYPE: TSP.
inline TspInstance parse_tsplib(std::string_view text) {
    TspInstance inst;
    std::optional<std::size_t> dimension;
    std::string weight_type;
    std::string weight_format;
    std::vector<double> coord_tokens;
    std::vector<double> weight_tokens;
    bool saw_coords = false;
    bool saw_weights = false;

    std::istringstream in{std::string(text)};
    std::string raw;
    std::vector<std::string> lines;
    while (std::getline(in, raw)) {
        lines.push_back(detail::trim(raw));
    }

    auto read_numbers = [&](std::size_t& idx, std::vector<double>& out) {
        while (idx + 1 < lines.size() && !detail::starts_section_or_keyword(lines[idx + 1])) {
            ++idx;
            std::istringstream ls(lines[idx]);
            std::string tok;
            while (ls >> tok) {
                try {
                    std::size_t used = 0;
                    out.push_back(std::stod(tok, &used));
                    if (used != tok.size()) {
                        throw ParseError("bad number '" + tok + "'");
                    }
                } catch (const std::logic_error&) {
                    throw ParseError("bad number '" + tok + "'");
                }
            }
        }
    };

    for (std::size_t idx = 0; idx < lines.size(); ++idx) {
        const std::string& line = lines[idx];
        if (line.empty()) {
            continue;
        }
        std::string key;
        std::string value;
        if (auto colon = line.find(':'); colon != std::string::npos) {
            key = detail::upper(detail::trim(line.substr(0, colon)));
            value = detail::trim(line.substr(colon + 1));
        } else {
            key = detail::upper(line);
        }

        if (key == "EOF") {
            break;
        } else if (key == "NAME") {
            inst.name = value;
        } else if (key == "TYPE") {
            if (detail::upper(value) != "TSP") {
                throw ParseError("unsupported TYPE: " + value);
            }
        } else if (key == "COMMENT" || key == "DISPLAY_DATA_TYPE" || key == "NODE_COORD_TYPE") {
            // informational
        } else if (key == "DIMENSION") {
            try {
                dimension = static_cast<std::size_t>(std::stoul(value));
            } catch (const std::logic_error&) {
                throw ParseError("bad DIMENSION: " + value);
            }
        } else if (key == "EDGE_WEIGHT_TYPE") {
            weight_type = detail::upper(value);
            if (weight_type != "EUC_2D" && weight_type != "GEO" && weight_type != "EXPLICIT") {
                throw ParseError("unsupported EDGE_WEIGHT_TYPE: " + value);
            }
        } else if (key == "EDGE_WEIGHT_FORMAT") {
            weight_format = detail::upper(value);
            if (weight_format != "FULL_MATRIX" && weight_format != "UPPER_ROW" &&
                weight_format != "LOWER_DIAG_ROW") {
                throw ParseError("unsupported EDGE_WEIGHT_FORMAT: " + value);
            }
        } else if (key == "NODE_COORD_SECTION") {
            saw_coords = true;
            read_numbers(idx, coord_tokens);
        } else if (key == "EDGE_WEIGHT_SECTION") {
            saw_weights = true;
            read_numbers(idx, weight_tokens);
        } else if (key == "DISPLAY_DATA_SECTION") {
            std::vector<double> ignored;
            read_numbers(idx, ignored);
        } else {
            throw ParseError("unsupported keyword: " + key);
        }
    }

    if (!dimension) {
        throw ParseError("missing DIMENSION");
    }
    if (weight_type.empty()) {
        throw ParseError("missing EDGE_WEIGHT_TYPE");
    }
    const std::size_t n = *dimension;
    if (n < 3) {
        throw ParseError("DIMENSION must be at least 3");
    }
    inst.n = n;
    inst.dist.assign(n * n, 0.0);

    if (weight_type == "EUC_2D" || weight_type == "GEO") {
        inst.weight_kind = weight_type == "GEO" ? WeightKind::Geo : WeightKind::Euc2D;
        if (!saw_coords) {
            throw ParseError("missing NODE_COORD_SECTION");
        }
        if (coord_tokens.size() != 3 * n) {
            throw ParseError("NODE_COORD_SECTION does not match DIMENSION " + std::to_string(n));
        }
        inst.coords.resize(n);
        std::vector<char> seen(n, 0);
        for (std::size_t k = 0; k < n; ++k) {
            const double label = coord_tokens[3 * k];
            if (label < 1 || label > static_cast<double>(n) || label != std::floor(label)) {
                throw ParseError("node index out of range in NODE_COORD_SECTION");
            }
            const auto node = static_cast<std::size_t>(label) - 1;
            if (seen[node]) {
                throw ParseError("duplicate node index in NODE_COORD_SECTION");
            }
            seen[node] = 1;
            inst.coords[node] = {coord_tokens[3 * k + 1], coord_tokens[3 * k + 2]};
        }
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = a + 1; b < n; ++b) {
                double d = 0.0;
                if (inst.weight_kind == WeightKind::Euc2D) {
                    const double dx = inst.coords[a].first - inst.coords[b].first;
                    const double dy = inst.coords[a].second - inst.coords[b].second;
                    d = detail::nint(std::sqrt(dx * dx + dy * dy));
                } else {
                    d = detail::geo_distance(inst.coords[a], inst.coords[b]);
                }
                inst.dist[a * n + b] = d;
                inst.dist[b * n + a] = d;
            }
        }
        return inst;
    }

    inst.weight_kind = WeightKind::Explicit;
    if (weight_format.empty()) {
        throw ParseError("EXPLICIT weights require EDGE_WEIGHT_FORMAT");
    }
    if (!saw_weights) {
        throw ParseError("missing EDGE_WEIGHT_SECTION");
    }
    auto expect = [&](std::size_t count) {
        if (weight_tokens.size() != count) {
            throw ParseError("EDGE_WEIGHT_SECTION has " + std::to_string(weight_tokens.size()) +
                             " entries, expected " + std::to_string(count) + " for " +
                             weight_format);
        }
    };
    for (double w : weight_tokens) {
        if (w < 0.0) {
            throw ParseError("negative edge weight");
        }
    }
    if (weight_format == "FULL_MATRIX") {
        expect(n * n);
        for (std::size_t a = 0; a < n; ++a) {
            if (weight_tokens[a * n + a] != 0.0) {
                throw ParseError("FULL_MATRIX has a nonzero diagonal");
            }
            for (std::size_t b = 0; b < n; ++b) {
                if (weight_tokens[a * n + b] != weight_tokens[b * n + a]) {
                    throw ParseError("FULL_MATRIX is not symmetric");
                }
            }
        }
        inst.dist = std::move(weight_tokens);
    } else if (weight_format == "UPPER_ROW") {
        expect(n * (n - 1) / 2);
        std::size_t k = 0;
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = a + 1; b < n; ++b, ++k) {
                inst.dist[a * n + b] = weight_tokens[k];
                inst.dist[b * n + a] = weight_tokens[k];
            }
        }
    } else {
        expect(n * (n + 1) / 2);
        std::size_t k = 0;
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b <= a; ++b, ++k) {
                if (a == b && weight_tokens[k] != 0.0) {
                    throw ParseError("LOWER_DIAG_ROW has a nonzero diagonal");
                }
                inst.dist[a * n + b] = weight_tokens[k];
                inst.dist[b * n + a] = weight_tokens[k];
            }
        }
    }
    return inst;
}

inline TspInstance load_tsplib(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open instance file: " + path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_tsplib(buf.str());
}

} // namespace genlab
