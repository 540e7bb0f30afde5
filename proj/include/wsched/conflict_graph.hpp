#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace wsched {

/// Dense user index in 0..L-1.
using UserId = std::int32_t;

struct Point2D {
    double x = 0.0;
    double y = 0.0;
};

/// Undirected interference graph over users. Two users are neighbours iff
/// their transmissions interfere; transmitting users must form an
/// independent set. Immutable after construction.
class ConflictGraph {
public:
    /// Explicit topology. Rejects self-loops, out-of-range ids and
    /// num_users == 0. Duplicate edges are merged.
    ConflictGraph(std::int32_t num_users,
                  std::span<const std::pair<UserId, UserId>> edges,
                  std::vector<Point2D> positions = {},
                  std::optional<double> threshold_d = std::nullopt);

    /// Random geometric graph: positions i.i.d. uniform on the unit square,
    /// edge iff Euclidean distance < threshold_d (strict).
    static ConflictGraph generate_geometric(std::int32_t num_users, double threshold_d,
                                            std::uint64_t rng_seed);

    std::int32_t num_users() const { return static_cast<std::int32_t>(adjacency_.size()); }

    /// N(i), sorted ascending. Never contains i.
    const std::vector<UserId>& neighbors(UserId i) const;
    /// N*(i) = N(i) ∪ {i}, sorted ascending.
    std::vector<UserId> closed_neighborhood(UserId i) const;
    bool adjacent(UserId i, UserId j) const;
    std::size_t degree(UserId i) const { return neighbors(i).size(); }

    bool is_independent_set(std::span<const UserId> set) const;
    /// True iff `set` is independent and no member of `eligible` outside
    /// `set` can be added while keeping it independent.
    bool is_maximal_independent_set(std::span<const UserId> set,
                                    std::span<const UserId> eligible) const;

    const std::vector<Point2D>& positions() const { return positions_; }
    std::optional<double> threshold_d() const { return threshold_d_; }
    /// All edges (i < j), lexicographically sorted.
    std::vector<std::pair<UserId, UserId>> edges() const;

    nlohmann::json to_json() const;
    static ConflictGraph from_json(const nlohmann::json& j);
    static ConflictGraph load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    /// Content hash over user count and edge set (positions excluded).
    std::string content_hash() const;

private:
    void check_id(UserId i) const;

    std::vector<std::vector<UserId>> adjacency_;
    std::vector<std::uint8_t> matrix_;  // row-major L*L
    std::vector<Point2D> positions_;
    std::optional<double> threshold_d_;
};

}  // namespace wsched
