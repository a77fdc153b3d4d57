#pragma once

#include "rpf/common.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rpf {

using UserId = std::size_t;
using ItemId = std::size_t;

/// A single user-item interaction at a point in time.
struct Event {
    double time = 0.0;
    UserId user = 0;
    ItemId item = 0;

    bool operator==(const Event &) const = default;
};

/**
 * Time-ordered interactions on the observation window [0, T).
 *
 * Besides the global sequence, keeps per-item and per-user index lists
 * (indices into events(), each in time order) so that slices such as the
 * events of followees of u on item p before t are cheap to enumerate.
 */
class EventHistory {
  public:
    EventHistory() = default;

    EventHistory(std::vector<Event> events, double horizon, std::size_t num_users,
                 std::size_t num_items)
        : events_(std::move(events)), horizon_(horizon), num_users_(num_users),
          num_items_(num_items) {
        if (!(horizon_ >= 0.0) || !std::isfinite(horizon_))
            throw data_error("event history: horizon must be finite and >= 0");
        std::stable_sort(events_.begin(), events_.end(),
                         [](const Event &a, const Event &b) { return a.time < b.time; });
        for (std::size_t n = 0; n < events_.size(); ++n) {
            const Event &e = events_[n];
            if (!(e.time >= 0.0) || !(e.time < horizon_))
                throw data_error("event " + std::to_string(n) + ": time " +
                                 std::to_string(e.time) + " outside [0, T)");
            if (e.user >= num_users_ || e.item >= num_items_)
                throw data_error("event " + std::to_string(n) + ": user/item id out of range");
        }
        by_item_.assign(num_items_, {});
        by_user_.assign(num_users_, {});
        for (std::size_t n = 0; n < events_.size(); ++n) {
            by_item_[events_[n].item].push_back(n);
            by_user_[events_[n].user].push_back(n);
        }
    }

    std::span<const Event> events() const { return events_; }
    const Event &operator[](std::size_t n) const { return events_[n]; }
    std::size_t size() const { return events_.size(); }
    bool empty() const { return events_.empty(); }
    double horizon() const { return horizon_; }
    std::size_t num_users() const { return num_users_; }
    std::size_t num_items() const { return num_items_; }

    /// Indices of all events on item p, in time order.
    std::span<const std::size_t> item_events(ItemId p) const { return by_item_.at(p); }
    /// Indices of all events of user u, in time order.
    std::span<const std::size_t> user_events(UserId u) const { return by_user_.at(u); }

    /// Number of leading entries of `indices` whose time is strictly before t.
    std::size_t count_before(std::span<const std::size_t> indices, double t) const {
        auto it = std::lower_bound(indices.begin(), indices.end(), t,
                                   [this](std::size_t n, double v) { return events_[n].time < v; });
        return static_cast<std::size_t>(it - indices.begin());
    }

    /// H_up(t): events of user u on item p strictly before t.
    std::vector<std::size_t> slice(UserId u, ItemId p, double t) const {
        std::vector<std::size_t> out;
        auto items = item_events(p);
        const std::size_t end = count_before(items, t);
        for (std::size_t k = 0; k < end; ++k)
            if (events_[items[k]].user == u) out.push_back(items[k]);
        return out;
    }

    /// H_{u-bar p}(t): events of users other than u on item p strictly before t.
    std::vector<std::size_t> slice_excluding(UserId u, ItemId p, double t) const {
        std::vector<std::size_t> out;
        auto items = item_events(p);
        const std::size_t end = count_before(items, t);
        for (std::size_t k = 0; k < end; ++k)
            if (events_[items[k]].user != u) out.push_back(items[k]);
        return out;
    }

    /// Events strictly before t, observed up to min(T, t), same id space.
    EventHistory prefix(double t) const {
        std::vector<Event> kept;
        for (const auto &e : events_)
            if (e.time < t) kept.push_back(e);
        return EventHistory(std::move(kept), std::min(horizon_, t), num_users_, num_items_);
    }

    /// First n events with the horizon set to `horizon`.
    EventHistory truncated(std::size_t n, double horizon) const {
        std::vector<Event> kept(events_.begin(),
                                events_.begin() + static_cast<std::ptrdiff_t>(std::min(n, size())));
        return EventHistory(std::move(kept), horizon, num_users_, num_items_);
    }

  private:
    std::vector<Event> events_;
    double horizon_ = 0.0;
    std::size_t num_users_ = 0;
    std::size_t num_items_ = 0;
    std::vector<std::vector<std::size_t>> by_item_;
    std::vector<std::vector<std::size_t>> by_user_;
};

/// Maps external string ids to dense indices in first-seen order.
class IndexMap {
  public:
    std::size_t intern(std::string_view key) {
        auto it = index_.find(std::string(key));
        if (it != index_.end()) return it->second;
        const std::size_t id = keys_.size();
        keys_.emplace_back(key);
        index_.emplace(keys_.back(), id);
        return id;
    }
    std::optional<std::size_t> find(std::string_view key) const {
        auto it = index_.find(std::string(key));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }
    const std::string &key(std::size_t id) const { return keys_.at(id); }
    std::size_t size() const { return keys_.size(); }

    /// Two-column text: external_id,index
    void write(std::ostream &out) const {
        for (std::size_t i = 0; i < keys_.size(); ++i) out << keys_[i] << ',' << i << '\n';
    }

  private:
    std::vector<std::string> keys_;
    std::unordered_map<std::string, std::size_t> index_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(delim, start);
        out.push_back(trim(line.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::optional<double> parse_double(std::string_view s) {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

/// Picks ',' '\t' ';' or ' ' from the first data-bearing line.
inline char detect_delimiter(std::string_view line) {
    for (char c : {',', '\t', ';'})
        if (line.find(c) != std::string_view::npos) return c;
    if (line.find(' ') != std::string_view::npos) return ' ';
    return '\0';
}

} // namespace detail

struct LoadOptions {
    /// Overrides T; when unset T is the max timestamp (nudged so it is excluded).
    std::optional<double> horizon;
    /// Forces a delimiter instead of auto-detection.
    std::optional<char> delimiter;
    /// Use the id columns as dense integer indices rather than interning strings.
    bool dense_ids = false;
    /// With dense_ids, the id spaces; zero means "max id + 1".
    std::size_t num_users = 0;
    std::size_t num_items = 0;
};

struct LoadedEvents {
    EventHistory history;
    IndexMap users;
    IndexMap items;
};

/**
 * Reads `user_id,item_id,timestamp` records. A first line whose timestamp
 * column does not parse as a number is treated as a header. Errors carry
 * the 1-based line number.
 */
inline LoadedEvents load_events(std::istream &in, const LoadOptions &opts = {}) {
    LoadedEvents out;
    std::vector<Event> events;
    std::string line;
    std::size_t line_no = 0;
    std::optional<char> delim = opts.delimiter;
    bool first_data = true;
    std::size_t max_user = 0, max_item = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = detail::trim(line);
        if (view.empty() || view.front() == '#') continue;
        if (!delim) {
            const char d = detail::detect_delimiter(view);
            if (d == '\0')
                throw data_error("line " + std::to_string(line_no) + ": unknown delimiter");
            delim = d;
        }
        auto cols = detail::split(view, *delim);
        if (*delim == ' ')
            std::erase_if(cols, [](std::string_view c) { return c.empty(); });
        if (cols.size() != 3)
            throw data_error("line " + std::to_string(line_no) + ": expected 3 columns, got " +
                             std::to_string(cols.size()));
        const auto time = detail::parse_double(cols[2]);
        if (!time) {
            if (first_data) {
                first_data = false;
                continue;
            }
            throw data_error("line " + std::to_string(line_no) + ": bad timestamp '" +
                             std::string(cols[2]) + "'");
        }
        first_data = false;
        if (!std::isfinite(*time) || *time < 0.0)
            throw data_error("line " + std::to_string(line_no) + ": negative or non-finite timestamp");
        if (cols[0].empty() || cols[1].empty())
            throw data_error("line " + std::to_string(line_no) + ": empty id");
        Event e;
        e.time = *time;
        if (opts.dense_ids) {
            std::size_t u = 0, p = 0;
            auto r0 = std::from_chars(cols[0].data(), cols[0].data() + cols[0].size(), u);
            auto r1 = std::from_chars(cols[1].data(), cols[1].data() + cols[1].size(), p);
            if (r0.ec != std::errc() || r0.ptr != cols[0].data() + cols[0].size() ||
                r1.ec != std::errc() || r1.ptr != cols[1].data() + cols[1].size())
                throw data_error("line " + std::to_string(line_no) + ": non-integer dense id");
            e.user = u;
            e.item = p;
            max_user = std::max(max_user, u + 1);
            max_item = std::max(max_item, p + 1);
        } else {
            e.user = out.users.intern(cols[0]);
            e.item = out.items.intern(cols[1]);
        }
        events.push_back(e);
    }

    std::size_t num_users = opts.dense_ids ? std::max(opts.num_users, max_user) : out.users.size();
    std::size_t num_items = opts.dense_ids ? std::max(opts.num_items, max_item) : out.items.size();
    if (opts.dense_ids) {
        for (std::size_t u = 0; u < num_users; ++u) out.users.intern(std::to_string(u));
        for (std::size_t p = 0; p < num_items; ++p) out.items.intern(std::to_string(p));
    }

    double horizon = 0.0;
    if (opts.horizon) {
        horizon = *opts.horizon;
    } else {
        if (events.empty()) throw data_error("empty event log and no horizon configured");
        double max_time = 0.0;
        for (const auto &e : events) max_time = std::max(max_time, e.time);
        horizon = std::nextafter(max_time, std::numeric_limits<double>::infinity());
    }
    out.history = EventHistory(std::move(events), horizon, num_users, num_items);
    return out;
}

inline LoadedEvents load_events_file(const std::string &path, const LoadOptions &opts = {}) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open event log '" + path + "'");
    return load_events(in, opts);
}

/// Writes the event log with dense ids and a header.
inline void write_events(std::ostream &out, const EventHistory &history) {
    out << "user_id,item_id,timestamp\n";
    out.precision(17);
    for (const auto &e : history.events()) out << e.user << ',' << e.item << ',' << e.time << '\n';
}

} // namespace rpf
