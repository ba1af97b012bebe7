#pragma once

// Road graph: intersections as nodes, road pieces as edges, with chains
// through degree-2 nodes contracted. Travel times come from per-class
// free-flow speeds.

#include "gridres/geo/layers.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace gridres::features {

using geo::Point;
using geo::RoadSegment;

struct RoadEdge {
    int a = 0;
    int b = 0;
    double length = 0.0;
    // Length carried by each road class, sorted by class name. A contracted
    // edge may span several classes.
    std::vector<std::pair<std::string, double>> class_lengths;

    bool is_loop() const { return a == b; }
};

struct RoadNetwork {
    std::vector<Point> nodes;
    std::vector<RoadEdge> edges;

    std::size_t node_count() const { return nodes.size(); }
    std::size_t edge_count() const { return edges.size(); }
    bool empty() const { return edges.empty(); }

    /// Degree with self-loops counted twice.
    std::vector<int> degrees() const {
        std::vector<int> d(nodes.size(), 0);
        for (const auto& e : edges) {
            ++d[static_cast<std::size_t>(e.a)];
            ++d[static_cast<std::size_t>(e.b)];
        }
        return d;
    }

    double total_length() const {
        double s = 0.0;
        for (const auto& e : edges) s += e.length;
        return s;
    }
};

namespace detail {

inline void add_class_length(std::vector<std::pair<std::string, double>>& parts, const std::string& cls, double len) {
    for (auto& [c, l] : parts) {
        if (c == cls) {
            l += len;
            return;
        }
    }
    parts.emplace_back(cls, len);
    std::sort(parts.begin(), parts.end());
}

struct PointKey {
    long long x, y;
    auto operator<=>(const PointKey&) const = default;
};

inline PointKey key_of(const Point& p) {
    // 1e-6 m lattice
    return {std::llround(p.x * 1e6), std::llround(p.y * 1e6)};
}

struct SplitPoint {
    double s;  // arc-length position along the segment
    Point p;
};

inline void sort_edges(std::vector<RoadEdge>& edges) {
    for (auto& e : edges)
        if (e.a > e.b) std::swap(e.a, e.b);
    std::sort(edges.begin(), edges.end(), [](const RoadEdge& x, const RoadEdge& y) {
        return std::tie(x.a, x.b, x.length, x.class_lengths) < std::tie(y.a, y.b, y.length, y.class_lengths);
    });
}

}  // namespace detail

/// Remove every node of degree exactly 2 by merging its two incident edges.
/// A pure cycle keeps its lowest-id node as an anchor carrying a self-loop.
inline RoadNetwork contract_degree_two(const RoadNetwork& in) {
    const std::size_t n = in.nodes.size();
    std::vector<RoadEdge> edges = in.edges;
    std::vector<bool> edge_alive(edges.size(), true);
    std::vector<std::vector<std::size_t>> incident(n);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        incident[static_cast<std::size_t>(edges[e].a)].push_back(e);
        incident[static_cast<std::size_t>(edges[e].b)].push_back(e);
    }
    std::vector<bool> node_alive(n, true);

    auto other_end = [&](std::size_t e, std::size_t v) {
        return static_cast<std::size_t>(edges[e].a) == v ? static_cast<std::size_t>(edges[e].b)
                                                          : static_cast<std::size_t>(edges[e].a);
    };
    auto replace_incident = [&](std::size_t node, std::size_t old_e, std::size_t new_e) {
        auto& inc = incident[node];
        auto it = std::find(inc.begin(), inc.end(), old_e);
        if (it != inc.end()) *it = new_e;
    };

    // Descending order leaves the lowest id as the anchor of a pure cycle.
    for (std::size_t vi = n; vi-- > 0;) {
        auto& inc = incident[vi];
        if (inc.size() != 2 || inc[0] == inc[1]) continue;
        const std::size_t e1 = inc[0];
        const std::size_t e2 = inc[1];
        const std::size_t a = other_end(e1, vi);
        const std::size_t b = other_end(e2, vi);
        RoadEdge merged;
        merged.a = static_cast<int>(a);
        merged.b = static_cast<int>(b);
        merged.length = edges[e1].length + edges[e2].length;
        merged.class_lengths = edges[e1].class_lengths;
        for (const auto& [c, l] : edges[e2].class_lengths) detail::add_class_length(merged.class_lengths, c, l);
        const std::size_t ne = edges.size();
        edges.push_back(std::move(merged));
        edge_alive.push_back(true);
        edge_alive[e1] = false;
        edge_alive[e2] = false;
        replace_incident(a, e1, ne);
        replace_incident(b, e2, ne);
        inc.clear();
        node_alive[vi] = false;
    }

    RoadNetwork out;
    std::vector<int> remap(n, -1);
    for (std::size_t v = 0; v < n; ++v) {
        if (!node_alive[v]) continue;
        remap[v] = static_cast<int>(out.nodes.size());
        out.nodes.push_back(in.nodes[v]);
    }
    for (std::size_t e = 0; e < edges.size(); ++e) {
        if (!edge_alive[e]) continue;
        RoadEdge re = edges[e];
        re.a = remap[static_cast<std::size_t>(re.a)];
        re.b = remap[static_cast<std::size_t>(re.b)];
        out.edges.push_back(std::move(re));
    }
    detail::sort_edges(out.edges);
    return out;
}

/// Planar graph from road segments of the configured classes: nodes at
/// segment endpoints and at crossings between different segments, then
/// degree-2 chains contracted. Node ids are ordered by coordinate, so the
/// result does not depend on input order.
inline RoadNetwork build_road_graph_uncontracted(const std::vector<RoadSegment>& segments,
                                                 const std::vector<std::string>& classes) {
    std::vector<const RoadSegment*> kept;
    for (const auto& s : segments) {
        if (classes.empty() || std::find(classes.begin(), classes.end(), s.road_class) != classes.end()) {
            if (s.polyline.size() >= 2 && s.length > 0.0) kept.push_back(&s);
        }
    }
    if (kept.empty()) return {};

    // Sub-edges with cumulative arc length offsets.
    struct SubEdge {
        std::size_t seg;
        Point a, b;
        double offset;
        geo::Rect box;
    };
    std::vector<SubEdge> subs;
    std::vector<std::vector<detail::SplitPoint>> splits(kept.size());
    for (std::size_t si = 0; si < kept.size(); ++si) {
        const auto& pl = kept[si]->polyline;
        double off = 0.0;
        for (std::size_t i = 1; i < pl.size(); ++i) {
            const std::array<Point, 2> ends{pl[i - 1], pl[i]};
            subs.push_back({si, pl[i - 1], pl[i], off, geo::bounding_box(ends)});
            off += geo::distance(pl[i - 1], pl[i]);
        }
        splits[si].push_back({0.0, pl.front()});
        splits[si].push_back({off, pl.back()});
    }

    // Crossings between different segments. Sorting by min x lets the
    // sweep stop early.
    std::vector<std::size_t> order(subs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return subs[x].box.min_x < subs[y].box.min_x; });
    for (std::size_t oi = 0; oi < order.size(); ++oi) {
        const auto& p = subs[order[oi]];
        for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
            const auto& q = subs[order[oj]];
            if (q.box.min_x > p.box.max_x) break;
            if (p.seg == q.seg || !p.box.overlaps(q.box)) continue;
            const double lp = geo::distance(p.a, p.b);
            const double lq = geo::distance(q.a, q.b);
            Point hit;
            double sp, sq;
            if (auto c = geo::segment_crossing(p.a, p.b, q.a, q.b)) {
                hit = c->first == 0.0 ? p.a : (c->first == 1.0 ? p.b : p.a + (p.b - p.a) * c->first);
                if (c->second == 0.0) hit = q.a;
                if (c->second == 1.0) hit = q.b;
                sp = p.offset + c->first * lp;
                sq = q.offset + c->second * lq;
            } else {
                // Parallel pieces only meet at shared endpoints.
                bool found = false;
                for (const Point& e : {q.a, q.b}) {
                    if (e == p.a || e == p.b) {
                        hit = e;
                        sp = p.offset + (e == p.a ? 0.0 : lp);
                        sq = q.offset + (e == q.a ? 0.0 : lq);
                        found = true;
                        break;
                    }
                }
                if (!found) continue;
            }
            splits[p.seg].push_back({sp, hit});
            splits[q.seg].push_back({sq, hit});
        }
    }

    // Nodes ordered by coordinate.
    std::map<detail::PointKey, Point> node_points;
    for (const auto& sv : splits)
        for (const auto& sp : sv) node_points.emplace(detail::key_of(sp.p), sp.p);
    RoadNetwork net;
    std::map<detail::PointKey, int> node_id;
    for (const auto& [k, p] : node_points) {
        node_id[k] = static_cast<int>(net.nodes.size());
        net.nodes.push_back(p);
    }

    for (std::size_t si = 0; si < kept.size(); ++si) {
        auto& sv = splits[si];
        std::sort(sv.begin(), sv.end(), [](const auto& x, const auto& y) { return x.s < y.s; });
        const double total = kept[si]->length;
        const double measured = sv.back().s;  // arc length from the polyline
        const double scale = measured > 0.0 ? total / measured : 1.0;
        for (std::size_t i = 1; i < sv.size(); ++i) {
            const int a = node_id.at(detail::key_of(sv[i - 1].p));
            const int b = node_id.at(detail::key_of(sv[i].p));
            const double len = (sv[i].s - sv[i - 1].s) * scale;
            if (a == b && !(len > 1e-9)) continue;
            if (!(len > 0.0)) continue;
            RoadEdge e{a, b, len, {{kept[si]->road_class, len}}};
            net.edges.push_back(std::move(e));
        }
    }
    detail::sort_edges(net.edges);
    return net;
}

inline RoadNetwork build_road_graph(const std::vector<RoadSegment>& segments, const std::vector<std::string>& classes) {
    return contract_degree_two(build_road_graph_uncontracted(segments, classes));
}

/// Newman degree assortativity as the Pearson correlation of the degrees at
/// both ends of every edge, each edge counted in both orientations. Returns
/// nothing for an empty network or zero degree variance.
inline std::optional<double> assortativity_coefficient(const RoadNetwork& net) {
    if (net.edges.empty()) return std::nullopt;
    const auto deg = net.degrees();
    double sx = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& e : net.edges) {
        const double da = deg[static_cast<std::size_t>(e.a)];
        const double db = deg[static_cast<std::size_t>(e.b)];
        sx += da + db;
        sxx += da * da + db * db;
        sxy += 2.0 * da * db;
    }
    const double m2 = 2.0 * static_cast<double>(net.edges.size());
    const double mean = sx / m2;
    const double var = sxx / m2 - mean * mean;
    if (!(var > 1e-12 * std::max(1.0, mean * mean))) return std::nullopt;
    const double r = (sxy / m2 - mean * mean) / var;
    return std::clamp(r, -1.0, 1.0);
}

/// km/h per road class.
using SpeedTable = std::map<std::string, double>;

inline double edge_minutes(const RoadEdge& e, const SpeedTable& speeds) {
    double minutes = 0.0;
    for (const auto& [cls, len] : e.class_lengths) {
        auto it = speeds.find(cls);
        if (it == speeds.end() || !(it->second > 0.0))
            throw ConfigError("no positive free-flow speed configured for road class '" + cls + "'");
        minutes += len / (it->second * 1000.0 / 60.0);
    }
    return minutes;
}

/// Nearest node by Euclidean distance, ties to the lowest id.
inline std::optional<int> nearest_node(const RoadNetwork& net, const Point& p) {
    std::optional<int> best;
    double best_d = kInf;
    for (std::size_t i = 0; i < net.nodes.size(); ++i) {
        const double d = geo::distance(net.nodes[i], p);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

/// Single-source shortest travel times (minutes) to every node.
inline std::vector<double> shortest_times(const RoadNetwork& net, int source, const SpeedTable& speeds) {
    const std::size_t n = net.nodes.size();
    std::vector<std::vector<std::pair<int, double>>> adj(n);
    for (const auto& e : net.edges) {
        const double w = edge_minutes(e, speeds);
        adj[static_cast<std::size_t>(e.a)].emplace_back(e.b, w);
        if (e.a != e.b) adj[static_cast<std::size_t>(e.b)].emplace_back(e.a, w);
    }
    std::vector<double> dist(n, kInf);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[static_cast<std::size_t>(source)] = 0.0;
    pq.emplace(0.0, source);
    while (!pq.empty()) {
        auto [d, u] = pq.top();
        pq.pop();
        if (d > dist[static_cast<std::size_t>(u)]) continue;
        for (const auto& [v, w] : adj[static_cast<std::size_t>(u)]) {
            const double nd = d + w;
            if (nd < dist[static_cast<std::size_t>(v)]) {
                dist[static_cast<std::size_t>(v)] = nd;
                pq.emplace(nd, v);
            }
        }
    }
    return dist;
}

/// Minutes from each origin (cell centroid) to each facility, both snapped
/// to their nearest network node. Unreachable pairs are +inf.
inline Matrix travel_time_matrix(const RoadNetwork& net, const std::vector<Point>& origins,
                                 const std::vector<Point>& facilities, const SpeedTable& speeds) {
    Matrix tt = Matrix::Constant(static_cast<Index>(origins.size()), static_cast<Index>(facilities.size()), kInf);
    if (net.nodes.empty() || net.edges.empty()) {
        if (!facilities.empty()) warn("travel_time_matrix: empty road network, all travel times are infinite");
        return tt;
    }
    std::vector<int> origin_nodes;
    origin_nodes.reserve(origins.size());
    for (const auto& o : origins) origin_nodes.push_back(*nearest_node(net, o));
    std::map<int, std::vector<double>> cache;
    for (std::size_t f = 0; f < facilities.size(); ++f) {
        const int fn = *nearest_node(net, facilities[f]);
        auto it = cache.find(fn);
        if (it == cache.end()) it = cache.emplace(fn, shortest_times(net, fn, speeds)).first;
        for (std::size_t o = 0; o < origins.size(); ++o)
            tt(static_cast<Index>(o), static_cast<Index>(f)) = it->second[static_cast<std::size_t>(origin_nodes[o])];
    }
    return tt;
}

}  // namespace gridres::features
