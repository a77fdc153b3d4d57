#pragma once

#include "rpf/common.hpp"
#include "rpf/events.hpp"

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rpf {

/// Directed influence edge: `source` is followed by `target`, so events of
/// `source` can trigger events of `target`. Weight slot in tau is the edge id.
struct Edge {
    UserId source = 0;
    UserId target = 0;
    bool operator==(const Edge &) const = default;
};

struct Link {
    UserId user = 0;
    std::size_t edge = 0;
};

/**
 * Follow graph. N_u (followees(u)) is the set of users whose events can
 * trigger u. With self_loops every user follows itself, which is the
 * self-excitation channel.
 */
class SocialNetwork {
  public:
    SocialNetwork() = default;

    /// `follows` holds (follower, followee) pairs; duplicates are merged.
    SocialNetwork(std::size_t num_users, std::vector<std::pair<UserId, UserId>> follows,
                  bool self_loops = true)
        : num_users_(num_users), self_loops_(self_loops) {
        std::vector<std::pair<UserId, UserId>> pairs; // (target, source)
        pairs.reserve(follows.size() + (self_loops ? num_users : 0));
        for (auto [follower, followee] : follows) {
            if (follower >= num_users || followee >= num_users)
                throw data_error("network: user id out of range");
            if (follower == followee) continue;
            pairs.emplace_back(follower, followee);
        }
        if (self_loops)
            for (UserId u = 0; u < num_users; ++u) pairs.emplace_back(u, u);
        std::sort(pairs.begin(), pairs.end());
        pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

        followees_.assign(num_users, {});
        followers_.assign(num_users, {});
        edges_.reserve(pairs.size());
        for (auto [target, source] : pairs) {
            const std::size_t id = edges_.size();
            edges_.push_back({source, target});
            followees_[target].push_back({source, id});
        }
        for (std::size_t id = 0; id < edges_.size(); ++id)
            followers_[edges_[id].source].push_back({edges_[id].target, id});
    }

    /// Self-loops only: the network of the non-social variants.
    static SocialNetwork self_only(std::size_t num_users) { return SocialNetwork(num_users, {}, true); }

    std::size_t num_users() const { return num_users_; }
    std::size_t num_edges() const { return edges_.size(); }
    bool self_loops() const { return self_loops_; }
    std::span<const Edge> edges() const { return edges_; }
    const Edge &edge(std::size_t id) const { return edges_.at(id); }

    /// N_u with edge ids, sorted by source.
    std::span<const Link> followees(UserId u) const { return followees_.at(u); }
    /// {v : u in N_v} with edge ids.
    std::span<const Link> followers(UserId v) const { return followers_.at(v); }

    /// Edge id of source -> target, if target follows source.
    std::optional<std::size_t> find_edge(UserId source, UserId target) const {
        const auto &list = followees_.at(target);
        auto it = std::lower_bound(list.begin(), list.end(), source,
                                   [](const Link &l, UserId s) { return l.user < s; });
        if (it == list.end() || it->user != source) return std::nullopt;
        return it->edge;
    }

    /// True when every edge is a self-loop and every user has one.
    bool is_self_only() const {
        if (edges_.size() != num_users_) return false;
        return std::all_of(edges_.begin(), edges_.end(),
                           [](const Edge &e) { return e.source == e.target; });
    }

    bool operator==(const SocialNetwork &o) const {
        return num_users_ == o.num_users_ && self_loops_ == o.self_loops_ && edges_ == o.edges_;
    }

  private:
    std::size_t num_users_ = 0;
    bool self_loops_ = true;
    std::vector<Edge> edges_;
    std::vector<std::vector<Link>> followees_;
    std::vector<std::vector<Link>> followers_;
};

/**
 * Reads `follower_id,followee_id` lines. Ids go through `users` so they
 * share the index space of the event log; unknown ids are rejected unless
 * `dense_ids`, in which case they are parsed as indices directly.
 */
inline SocialNetwork load_network(std::istream &in, std::size_t num_users, const IndexMap *users,
                                  bool self_loops = true) {
    std::vector<std::pair<UserId, UserId>> follows;
    std::string line;
    std::size_t line_no = 0;
    bool first_data = true;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = detail::trim(line);
        if (view.empty() || view.front() == '#') continue;
        const char delim = detail::detect_delimiter(view);
        if (delim == '\0') throw data_error("network line " + std::to_string(line_no) + ": unknown delimiter");
        auto cols = detail::split(view, delim);
        if (delim == ' ') std::erase_if(cols, [](std::string_view c) { return c.empty(); });
        if (cols.size() != 2)
            throw data_error("network line " + std::to_string(line_no) + ": expected 2 columns");
        auto resolve = [&](std::string_view key) -> std::optional<UserId> {
            if (users) return users->find(key);
            std::size_t v = 0;
            auto r = std::from_chars(key.data(), key.data() + key.size(), v);
            if (r.ec != std::errc() || r.ptr != key.data() + key.size()) return std::nullopt;
            return v;
        };
        const auto follower = resolve(cols[0]);
        const auto followee = resolve(cols[1]);
        if (!follower || !followee) {
            if (first_data) {
                first_data = false;
                continue; // header
            }
            throw data_error("network line " + std::to_string(line_no) + ": unknown user id");
        }
        first_data = false;
        if (*follower >= num_users || *followee >= num_users)
            throw data_error("network line " + std::to_string(line_no) + ": user id out of range");
        follows.emplace_back(*follower, *followee);
    }
    return SocialNetwork(num_users, std::move(follows), self_loops);
}

inline SocialNetwork load_network_file(const std::string &path, std::size_t num_users,
                                       const IndexMap *users, bool self_loops = true) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open network file '" + path + "'");
    return load_network(in, num_users, users, self_loops);
}

/// Edge list `follower_id,followee_id` without self-loops.
inline void write_network(std::ostream &out, const SocialNetwork &net) {
    out << "follower_id,followee_id\n";
    for (const auto &e : net.edges())
        if (e.source != e.target) out << e.target << ',' << e.source << '\n';
}

} // namespace rpf
