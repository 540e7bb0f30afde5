#include "wsched/conflict_graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "wsched/hashing.hpp"
#include "wsched/rng.hpp"

namespace wsched {

ConflictGraph::ConflictGraph(std::int32_t num_users,
                             std::span<const std::pair<UserId, UserId>> edges,
                             std::vector<Point2D> positions, std::optional<double> threshold_d)
    : positions_(std::move(positions)), threshold_d_(threshold_d) {
    if (num_users < 1) throw std::invalid_argument("conflict graph needs at least one user");
    if (!positions_.empty() && static_cast<std::int32_t>(positions_.size()) != num_users)
        throw std::invalid_argument("positions size does not match num_users");
    for (const auto& p : positions_) {
        if (!(p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0))
            throw std::invalid_argument("position outside the unit square");
    }
    const auto n = static_cast<std::size_t>(num_users);
    adjacency_.resize(n);
    matrix_.assign(n * n, 0);
    for (const auto& [a, b] : edges) {
        if (a < 0 || b < 0 || a >= num_users || b >= num_users)
            throw std::invalid_argument("edge endpoint out of range");
        if (a == b) throw std::invalid_argument("self-edge not allowed");
        const auto ia = static_cast<std::size_t>(a);
        const auto ib = static_cast<std::size_t>(b);
        if (matrix_[ia * n + ib]) continue;
        matrix_[ia * n + ib] = matrix_[ib * n + ia] = 1;
        adjacency_[ia].push_back(b);
        adjacency_[ib].push_back(a);
    }
    for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());
}

ConflictGraph ConflictGraph::generate_geometric(std::int32_t num_users, double threshold_d,
                                                std::uint64_t rng_seed) {
    if (num_users < 1) throw std::invalid_argument("generate_geometric: num_users must be >= 1");
    if (!(threshold_d > 0.0)) throw std::invalid_argument("generate_geometric: threshold_d must be > 0");
    Rng rng = make_stream(rng_seed, StreamTag::topology);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Point2D> pos(static_cast<std::size_t>(num_users));
    for (auto& p : pos) {
        p.x = unit(rng);
        p.y = unit(rng);
    }
    std::vector<std::pair<UserId, UserId>> edges;
    for (UserId i = 0; i < num_users; ++i) {
        for (UserId j = i + 1; j < num_users; ++j) {
            const double dx = pos[static_cast<std::size_t>(i)].x - pos[static_cast<std::size_t>(j)].x;
            const double dy = pos[static_cast<std::size_t>(i)].y - pos[static_cast<std::size_t>(j)].y;
            if (std::hypot(dx, dy) < threshold_d) edges.emplace_back(i, j);
        }
    }
    return ConflictGraph(num_users, edges, std::move(pos), threshold_d);
}

void ConflictGraph::check_id(UserId i) const {
    if (i < 0 || i >= num_users())
        throw std::out_of_range("user id " + std::to_string(i) + " out of range");
}

const std::vector<UserId>& ConflictGraph::neighbors(UserId i) const {
    check_id(i);
    return adjacency_[static_cast<std::size_t>(i)];
}

std::vector<UserId> ConflictGraph::closed_neighborhood(UserId i) const {
    std::vector<UserId> out = neighbors(i);
    out.insert(std::lower_bound(out.begin(), out.end(), i), i);
    return out;
}

bool ConflictGraph::adjacent(UserId i, UserId j) const {
    check_id(i);
    check_id(j);
    const auto n = static_cast<std::size_t>(num_users());
    return matrix_[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)] != 0;
}

bool ConflictGraph::is_independent_set(std::span<const UserId> set) const {
    for (std::size_t a = 0; a < set.size(); ++a)
        for (std::size_t b = a + 1; b < set.size(); ++b)
            if (adjacent(set[a], set[b])) return false;
    return true;
}

bool ConflictGraph::is_maximal_independent_set(std::span<const UserId> set,
                                               std::span<const UserId> eligible) const {
    if (!is_independent_set(set)) return false;
    for (UserId candidate : eligible) {
        if (std::find(set.begin(), set.end(), candidate) != set.end()) continue;
        const bool blocked = std::any_of(set.begin(), set.end(),
                                         [&](UserId s) { return adjacent(candidate, s); });
        if (!blocked) return false;
    }
    return true;
}

std::vector<std::pair<UserId, UserId>> ConflictGraph::edges() const {
    std::vector<std::pair<UserId, UserId>> out;
    for (UserId i = 0; i < num_users(); ++i)
        for (UserId j : adjacency_[static_cast<std::size_t>(i)])
            if (i < j) out.emplace_back(i, j);
    return out;
}

nlohmann::json ConflictGraph::to_json() const {
    nlohmann::json j;
    j["num_users"] = num_users();
    nlohmann::json e = nlohmann::json::array();
    for (const auto& [a, b] : edges()) e.push_back({a, b});
    j["edges"] = std::move(e);
    if (!positions_.empty()) {
        nlohmann::json p = nlohmann::json::array();
        for (const auto& pt : positions_) p.push_back({pt.x, pt.y});
        j["positions"] = std::move(p);
    }
    if (threshold_d_) j["threshold_d"] = *threshold_d_;
    return j;
}

ConflictGraph ConflictGraph::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("graph: expected a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (key != "num_users" && key != "edges" && key != "positions" && key != "threshold_d")
            throw std::invalid_argument("graph: unknown key '" + key + "'");
    }
    if (!j.contains("num_users") || !j.contains("edges"))
        throw std::invalid_argument("graph: num_users and edges are required");
    const auto n = j.at("num_users").get<std::int32_t>();
    std::vector<std::pair<UserId, UserId>> edges;
    for (const auto& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 2) throw std::invalid_argument("graph: edge must be [i, j]");
        edges.emplace_back(e[0].get<UserId>(), e[1].get<UserId>());
    }
    std::vector<Point2D> pos;
    if (j.contains("positions")) {
        for (const auto& p : j.at("positions")) {
            if (!p.is_array() || p.size() != 2) throw std::invalid_argument("graph: position must be [x, y]");
            pos.push_back({p[0].get<double>(), p[1].get<double>()});
        }
    }
    std::optional<double> d;
    if (j.contains("threshold_d")) d = j.at("threshold_d").get<double>();
    return ConflictGraph(n, edges, std::move(pos), d);
}

ConflictGraph ConflictGraph::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open graph file " + path.string());
    return from_json(nlohmann::json::parse(in));
}

void ConflictGraph::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write graph file " + path.string());
    out << to_json().dump(2) << '\n';
}

std::string ConflictGraph::content_hash() const {
    Fnv1a h;
    h.update_u64(static_cast<std::uint64_t>(num_users()));
    for (const auto& [a, b] : edges()) {
        h.update_u64(static_cast<std::uint64_t>(a));
        h.update_u64(static_cast<std::uint64_t>(b));
    }
    return h.hex();
}

}  // namespace wsched
