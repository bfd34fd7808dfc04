#ifndef ISOISING_DOMAIN_HPP
#define ISOISING_DOMAIN_HPP

#include <array>
#include <queue>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "isoising/lattice.hpp"

namespace isoising {

enum class DomainKind { Fk, Quad, Spin };
enum class FaceKind { Inner, WhiteTri, BlackTri };

/// A face of a discrete domain: an inner rhombus, or a boundary half-rhombus
/// kept as the triangle apex/d1/d2 where (d1, d2) is the cut diagonal in
/// boundary-walk order.  WhiteTri cuts along the white diagonal (black apex),
/// BlackTri along the black diagonal (white apex).
struct Face {
    int rhombus = -1;
    FaceKind kind = FaceKind::Inner;
    int apex = -1;
    int d1 = -1, d2 = -1;
    int arc = -1;        // boundary faces: index into arcs
    cplx center;         // rhombus center (inner) or cut-diagonal midpoint
};

struct FaceSide {
    int edge = -1;  // graph edge id
    int vb = -1, vw = -1;
};

struct Arc {
    Color poly_color = Color::White;  // color of the boundary polyline
    std::vector<int> faces;           // boundary face indices in walk order
    std::vector<int> polyline;        // boundary vertices in walk order
    bool tau_along_walk = true;       // tangent direction vs. walk order
};

struct MarkedEdge {
    int edge = -1;  // graph edge id
    int vb = -1, vw = -1;
    int inner_face = -1;  // domain face on the region side
};

struct OrientedEdge {
    int edge = -1;
    int from = -1, to = -1;
};

class DiscreteDomain {
  public:
    IsoradialGraph graph;  // private rotated copy
    DomainKind kind = DomainKind::Fk;

    std::vector<Face> faces;        // inner faces first, then boundary faces
    int n_inner = 0;
    std::vector<std::vector<FaceSide>> sides;  // per face, ccw for inner faces
    std::vector<Arc> arcs;
    std::vector<MarkedEdge> marked;          // Fk: {a,b}; Quad: {a,b,c,d}
    int spin_a = -1, spin_b = -1;            // Spin: boundary face indices
    cplx b_orientation;                      // unit vector of [b_b b_w] (Fk/Quad)

    int face_of_rhombus(int z) const {
        auto it = rhombus_face_.find(z);
        return it == rhombus_face_.end() ? -1 : it->second;
    }
    bool is_inner_face(int f) const { return f < n_inner; }

    /// Domain faces incident to a graph edge; second = -1 on the rim.
    std::array<int, 2> edge_faces(int edge) const {
        auto it = edge_faces_.find(edge);
        return it == edge_faces_.end() ? std::array<int, 2>{-1, -1} : it->second;
    }

    const std::vector<int>& interior_edges() const { return interior_edges_; }
    const std::vector<int>& domain_edges() const { return domain_edges_; }

    /// Direction [i(w-u)]^{-1/2} of a domain edge, branch arg in (-pi/2, pi/2].
    cplx edge_nu(int edge) const { return edge_nu_.at(edge); }
    cplx edge_cross_dir(int edge) const {  // i(w-u)/delta, the canonical crossing direction
        const LatticeEdge& e = graph.edges[edge];
        return cplx(0, 1) * (graph.pos(e.b) - graph.pos(e.a)) / graph.delta;
    }

    /// Vertices incident to domain faces; `interior` means every graph face
    /// around the vertex is an inner face of this domain.
    const std::vector<int>& vertices() const { return vertices_; }
    bool vertex_interior(int v) const {
        auto it = vertex_interior_.find(v);
        return it != vertex_interior_.end() && it->second;
    }

    /// Boundary tangent tau at a boundary face (directed per arc convention).
    cplx tau(int f) const {
        const Face& face = faces[f];
        cplx d = graph.pos(face.d2) - graph.pos(face.d1);
        return arcs[face.arc].tau_along_walk ? d : -d;
    }

    double delta() const { return graph.delta; }

    void register_face(const Face& f, const std::vector<FaceSide>& ss) {
        int idx = static_cast<int>(faces.size());
        faces.push_back(f);
        sides.push_back(ss);
        if (f.kind == FaceKind::Inner) rhombus_face_[f.rhombus] = idx;
        for (const FaceSide& s : ss) {
            auto [it, fresh] = edge_faces_.try_emplace(s.edge, std::array<int, 2>{idx, -1});
            if (!fresh) {
                if (it->second[1] != -1)
                    fail(ErrorKind::TraceError, "domain: more than two faces on one edge");
                it->second[1] = idx;
            }
        }
    }

    void finalize_edges() {
        domain_edges_.clear();
        interior_edges_.clear();
        for (const auto& [e, ff] : edge_faces_) {
            domain_edges_.push_back(e);
            if (ff[1] != -1) interior_edges_.push_back(e);
        }
        std::sort(domain_edges_.begin(), domain_edges_.end());
        std::sort(interior_edges_.begin(), interior_edges_.end());
        edge_nu_.clear();
        for (int e : domain_edges_) {
            const LatticeEdge& le = graph.edges[e];
            edge_nu_[e] = inv_sqrt_dir(cplx(0, 1) * (graph.pos(le.b) - graph.pos(le.a)));
        }
        std::set<int> vs;
        for (const auto& ss : sides)
            for (const FaceSide& s : ss) {
                vs.insert(s.vb);
                vs.insert(s.vw);
            }
        vertices_.assign(vs.begin(), vs.end());
        vertex_interior_.clear();
        for (int v : vertices_) {
            const VertexFan& fan = graph.fans[v];
            bool inside = fan.closed;
            for (const FanEntry& fe : fan.entries) {
                int f = face_of_rhombus(fe.rhombus);
                if (f == -1) inside = false;
            }
            vertex_interior_[v] = inside;
        }
    }

  private:
    std::unordered_map<int, std::array<int, 2>> edge_faces_;
    std::unordered_map<int, int> rhombus_face_;
    std::unordered_map<int, cplx> edge_nu_;
    std::vector<int> interior_edges_, domain_edges_;
    std::vector<int> vertices_;
    std::unordered_map<int, bool> vertex_interior_;
};

namespace detail {

inline std::vector<FaceSide> rhombus_sides(const IsoradialGraph& g, const Rhombus& r) {
    auto mk = [&](int p, int q) {
        FaceSide s;
        s.edge = g.edge_between(p, q);
        s.vb = g.color(p) == Color::Black ? p : q;
        s.vw = g.color(p) == Color::Black ? q : p;
        return s;
    };
    return {mk(r.u1, r.w1), mk(r.w1, r.u2), mk(r.u2, r.w2), mk(r.w2, r.u1)};
}

/// Closed counterclockwise frontier walk of a simply connected rhombus set.
inline std::vector<OrientedEdge> frontier_walk(const IsoradialGraph& g,
                                               const std::unordered_set<int>& region) {
    // frontier edges, oriented with the region on the left
    std::unordered_map<int, OrientedEdge> frontier;  // edge id -> orientation
    for (int z : region) {
        const Rhombus& r = g.rh(z);
        int c[5] = {r.u1, r.w1, r.u2, r.w2, r.u1};
        for (int k = 0; k < 4; ++k) {
            int e = g.edge_between(c[k], c[k + 1]);
            const LatticeEdge& le = g.edges[e];
            int zother = le.face0 == z ? le.face1 : le.face0;
            if (zother != -1 && region.count(zother)) continue;
            // ccw rhombus order means corner(k) -> corner(k+1) has the face on the left
            frontier[e] = {e, c[k], c[k + 1]};
        }
    }
    if (frontier.empty()) fail(ErrorKind::BadInput, "carve: empty region");

    std::unordered_map<int, std::vector<int>> outgoing;  // vertex -> frontier edge ids
    for (auto& [e, oe] : frontier) outgoing[oe.from].push_back(e);

    std::vector<OrientedEdge> walk;
    std::unordered_set<int> used;
    OrientedEdge cur = frontier.begin()->second;
    while (true) {
        walk.push_back(cur);
        used.insert(cur.edge);
        if (walk.size() > frontier.size())
            fail(ErrorKind::NotSimplyConnected, "carve: frontier walk does not close");
        // next edge: first outgoing frontier edge rotating clockwise from the
        // reversed incoming direction (keeps the region hugged on the left)
        cplx back = g.pos(cur.from) - g.pos(cur.to);
        int best = -1;
        double best_ang = -10.0;
        for (int e : outgoing[cur.to]) {
            if (used.count(e)) continue;
            cplx dir = g.pos(frontier[e].to) - g.pos(cur.to);
            double a = std::arg(dir / back);  // (-pi, pi]
            if (a <= 1e-12) a += 2 * kPi;     // strictly behind -> wrap
            if (a > best_ang) {
                best_ang = a;
                best = e;
            }
        }
        if (best == -1) break;
        cur = frontier[best];
    }
    if (walk.size() != frontier.size() || walk.back().to != walk.front().from)
        fail(ErrorKind::NotSimplyConnected, "carve: region boundary is not a single closed walk");
    return walk;
}

inline void check_region(const IsoradialGraph& g, const std::unordered_set<int>& region) {
    if (region.empty()) fail(ErrorKind::BadInput, "carve: empty region");
    // face connectivity
    std::unordered_set<int> seen;
    std::queue<int> q;
    q.push(*region.begin());
    seen.insert(*region.begin());
    while (!q.empty()) {
        int z = q.front();
        q.pop();
        const Rhombus& r = g.rh(z);
        int c[5] = {r.u1, r.w1, r.u2, r.w2, r.u1};
        for (int k = 0; k < 4; ++k) {
            int e = g.edge_between(c[k], c[k + 1]);
            const LatticeEdge& le = g.edges[e];
            int zo = le.face0 == z ? le.face1 : le.face0;
            if (zo != -1 && region.count(zo) && !seen.count(zo)) {
                seen.insert(zo);
                q.push(zo);
            }
        }
    }
    if (seen.size() != region.size())
        fail(ErrorKind::NotSimplyConnected, "carve: region is not face-connected");
    // Euler characteristic V - E + F = 1 rules out holes
    std::unordered_set<int> vs;
    std::unordered_set<std::int64_t> es;
    for (int z : region) {
        const Rhombus& r = g.rh(z);
        int c[5] = {r.u1, r.w1, r.u2, r.w2, r.u1};
        for (int k = 0; k < 4; ++k) {
            vs.insert(c[k]);
            es.insert(IsoradialGraph::edge_key(c[k], c[k + 1]));
        }
    }
    long long chi = static_cast<long long>(vs.size()) - static_cast<long long>(es.size()) +
                    static_cast<long long>(region.size());
    if (chi != 1) fail(ErrorKind::NotSimplyConnected, "carve: region has holes");
}

/// Boundary half-rhombi contributed by one apex visit: the outside fan of
/// `apex` from neighbor w_prev to neighbor w_next, in walk order.
inline void attach_apex_fan(const IsoradialGraph& g, const std::unordered_set<int>& region,
                            int apex, int w_prev, int w_next, FaceKind tri_kind, int arc_idx,
                            DiscreteDomain& dom, Arc& arc) {
    const VertexFan& fan = g.fans[apex];
    if (!fan.closed)
        fail(ErrorKind::BadMarkedPoint, "carve: boundary apex touches the graph rim");
    const std::size_t n = fan.entries.size();
    std::size_t start = n;
    for (std::size_t s = 0; s < n; ++s)
        if (fan.entries[s].nbr == w_prev) start = s;
    if (start == n) fail(ErrorKind::TraceError, "carve: apex fan inconsistent");
    for (std::size_t k = 0; k < n; ++k) {
        const FanEntry& fe = fan.entries[(start + k) % n];
        if (fe.nbr == w_next && k > 0) return;
        if (region.count(fe.rhombus))
            fail(ErrorKind::TraceError, "carve: inner rhombus inside an outside fan");
        const FanEntry& next = fan.entries[(start + k + 1) % n];
        Face f;
        f.rhombus = fe.rhombus;
        f.kind = tri_kind;
        f.apex = apex;
        f.d1 = fe.nbr;
        f.d2 = next.nbr;
        f.arc = arc_idx;
        f.center = (g.pos(f.d1) + g.pos(f.d2)) / 2.0;
        FaceSide s1{g.edge_between(apex, f.d1), -1, -1};
        FaceSide s2{g.edge_between(apex, f.d2), -1, -1};
        auto fill = [&](FaceSide& s, int other) {
            s.vb = g.color(apex) == Color::Black ? apex : other;
            s.vw = g.color(apex) == Color::Black ? other : apex;
        };
        fill(s1, f.d1);
        fill(s2, f.d2);
        dom.register_face(f, {s1, s2});
        arc.faces.push_back(static_cast<int>(dom.faces.size()) - 1);
        arc.polyline.push_back(f.d2);
    }
    fail(ErrorKind::TraceError, "carve: apex fan never reached the next frontier edge");
}

inline int walk_position(const std::vector<OrientedEdge>& walk, int edge_id) {
    for (std::size_t i = 0; i < walk.size(); ++i)
        if (walk[i].edge == edge_id) return static_cast<int>(i);
    fail(ErrorKind::BadMarkedPoint, "carve: marked point is not a boundary edge of the region");
}

}  // namespace detail

/// Carve a Dobrushin domain (two or four marked points) out of `g`.  The
/// marked points are frontier edges of the region; the arc that follows each
/// marked edge in ccw walk order must start with a white vertex for white
/// arcs and a black one for black arcs.  The embedding is rotated so that the
/// b edge satisfies pos(b_b) - pos(b_w) = i delta.
inline DiscreteDomain carve_marked(const IsoradialGraph& g0, const std::vector<int>& region_ids,
                                   const std::vector<int>& marked_edges) {
    std::unordered_set<int> region(region_ids.begin(), region_ids.end());
    detail::check_region(g0, region);

    DiscreteDomain dom;
    dom.graph = g0;
    dom.kind = marked_edges.size() == 2 ? DomainKind::Fk : DomainKind::Quad;
    IsoradialGraph& g = dom.graph;

    auto walk = detail::frontier_walk(g, region);
    const int nm = static_cast<int>(marked_edges.size());
    if (nm != 2 && nm != 4) fail(ErrorKind::BadMarkedPoint, "carve: need 2 or 4 marked points");

    std::vector<int> pos(nm);
    for (int k = 0; k < nm; ++k) pos[k] = detail::walk_position(walk, marked_edges[k]);
    for (int k = 0; k < nm; ++k)
        for (int l = k + 1; l < nm; ++l)
            if (pos[k] == pos[l])
                fail(ErrorKind::BadMarkedPoint, "carve: marked points coincide");
    int descents = 0;
    for (int k = 0; k < nm; ++k)
        if (pos[(k + 1) % nm] < pos[k]) ++descents;
    if (descents > 1) fail(ErrorKind::BadMarkedPoint, "carve: marked points out of cyclic order");

    // arcs alternate white/black starting after the first marked point
    for (int k = 0; k < nm; ++k) {
        const OrientedEdge& me = walk[pos[k]];
        Color need = (k % 2 == 0) ? Color::White : Color::Black;
        if (g.color(me.to) != need)
            fail(ErrorKind::BadMarkedPoint, "carve: marked point parity does not fit the arcs");
    }

    // rotate so that the b edge is vertical with its black vertex on top
    {
        const OrientedEdge& be = walk[pos[1]];
        int bb = g.color(be.from) == Color::Black ? be.from : be.to;
        int bw = g.color(be.from) == Color::Black ? be.to : be.from;
        cplx lam = cplx(0, 1) * g.delta / (g.pos(bb) - g.pos(bw));
        lam /= std::abs(lam);
        g.rotate(lam);
    }

    for (int z : region_ids) {
        const Rhombus& r = g.rh(z);
        Face f;
        f.rhombus = z;
        f.kind = FaceKind::Inner;
        f.center = r.center;
        dom.register_face(f, detail::rhombus_sides(g, r));
    }
    dom.n_inner = static_cast<int>(dom.faces.size());

    const int W = static_cast<int>(walk.size());
    for (int k = 0; k < nm; ++k) {
        int p0 = pos[k], p1 = pos[(k + 1) % nm];
        Color poly = (k % 2 == 0) ? Color::White : Color::Black;
        Arc arc;
        arc.poly_color = poly;
        arc.tau_along_walk = (poly == Color::White);
        arc.polyline.push_back(walk[p0].to);
        int arc_idx = static_cast<int>(dom.arcs.size());
        // apexes: opposite-color frontier vertices strictly inside the arc
        for (int i = p0 + 1; (i % W) != p1; ++i) {
            const OrientedEdge& oe = walk[i % W];
            int v = oe.to;
            if ((i + 1) % W == p1 % W && false) break;
            if (v == walk[p1 % W].from && g.color(v) == poly) break;
            if (g.color(v) == poly) continue;  // polyline vertex, no fan
            int w_prev = oe.from;
            int w_next = walk[(i + 1) % W].to;
            detail::attach_apex_fan(g, region, v, w_prev, w_next,
                                    poly == Color::White ? FaceKind::WhiteTri : FaceKind::BlackTri,
                                    arc_idx, dom, arc);
        }
        dom.arcs.push_back(std::move(arc));
    }

    for (int k = 0; k < nm; ++k) {
        const OrientedEdge& oe = walk[pos[k]];
        MarkedEdge me;
        me.edge = oe.edge;
        me.vb = g.color(oe.from) == Color::Black ? oe.from : oe.to;
        me.vw = g.color(oe.from) == Color::Black ? oe.to : oe.from;
        const LatticeEdge& le = g.edges[oe.edge];
        int zin = region.count(le.face0) ? le.face0 : le.face1;
        me.inner_face = dom.face_of_rhombus(zin);
        dom.marked.push_back(me);
    }
    dom.b_orientation = (g.pos(dom.marked[1].vb) - g.pos(dom.marked[1].vw)) / g.delta;

    dom.finalize_edges();
    return dom;
}

inline DiscreteDomain carve_dobrushin(const IsoradialGraph& g, const std::vector<int>& region,
                                      int a_edge, int b_edge) {
    return carve_marked(g, region, {a_edge, b_edge});
}

inline DiscreteDomain carve_quad(const IsoradialGraph& g, const std::vector<int>& region,
                                 int a_edge, int b_edge, int c_edge, int d_edge) {
    return carve_marked(g, region, {a_edge, b_edge, c_edge, d_edge});
}

/// Carve a spin domain: every boundary half-rhombus is cut along its white
/// diagonal, so the boundary polyline passes through white vertices only.
/// a_rhombus / b_rhombus select the marked boundary half-rhombi; the apex
/// arguments disambiguate when a rhombus appears as two boundary faces.
inline DiscreteDomain carve_spin(const IsoradialGraph& g0, const std::vector<int>& region_ids,
                                 int a_rhombus, int b_rhombus, int a_apex = -1, int b_apex = -1) {
    std::unordered_set<int> region(region_ids.begin(), region_ids.end());
    detail::check_region(g0, region);

    DiscreteDomain dom;
    dom.graph = g0;
    dom.kind = DomainKind::Spin;
    IsoradialGraph& g = dom.graph;

    for (int z : region_ids) {
        const Rhombus& r = g.rh(z);
        Face f;
        f.rhombus = z;
        f.kind = FaceKind::Inner;
        f.center = r.center;
        dom.register_face(f, detail::rhombus_sides(g, r));
    }
    dom.n_inner = static_cast<int>(dom.faces.size());

    auto walk = detail::frontier_walk(g, region);
    const int W = static_cast<int>(walk.size());
    Arc arc;
    arc.poly_color = Color::White;
    arc.tau_along_walk = true;  // tau oriented counterclockwise
    for (int i = 0; i < W; ++i) {
        const OrientedEdge& oe = walk[i];
        int v = oe.to;
        if (g.color(v) == Color::White) continue;  // polyline vertices come from the fans
        int w_prev = oe.from;
        int w_next = walk[(i + 1) % W].to;
        detail::attach_apex_fan(g, region, v, w_prev, w_next, FaceKind::WhiteTri, 0, dom, arc);
    }
    dom.arcs.push_back(std::move(arc));

    auto find_boundary_face = [&](int z, int apex) {
        for (int f = dom.n_inner; f < static_cast<int>(dom.faces.size()); ++f)
            if (dom.faces[f].rhombus == z && (apex == -1 || dom.faces[f].apex == apex)) return f;
        fail(ErrorKind::BadMarkedPoint, "carve_spin: marked rhombus is not a boundary half-rhombus");
    };
    dom.spin_a = find_boundary_face(a_rhombus, a_apex);
    dom.spin_b = find_boundary_face(b_rhombus, b_apex);
    if (dom.spin_a == dom.spin_b)
        fail(ErrorKind::BadMarkedPoint, "carve_spin: marked points coincide");

    dom.finalize_edges();
    return dom;
}

/// Rhombi of g whose center lies in the axis-aligned rectangle.
inline std::vector<int> region_in_rect(const IsoradialGraph& g, double x0, double x1, double y0,
                                       double y1) {
    std::vector<int> out;
    for (const Rhombus& r : g.rhombi) {
        double x = std::real(r.center), y = std::imag(r.center);
        if (x > x0 && x < x1 && y > y0 && y < y1) out.push_back(r.id);
    }
    return out;
}

/// Frontier edge of `region` nearest to `p` whose walk orientation starts
/// with the requested color (Black for marks followed by a white arc).
inline int find_marked_edge_near(const IsoradialGraph& g, const std::vector<int>& region_ids,
                                 cplx p, Color first_color) {
    std::unordered_set<int> region(region_ids.begin(), region_ids.end());
    auto walk = detail::frontier_walk(g, region);
    int best = -1;
    double bd = 1e300;
    for (const OrientedEdge& oe : walk) {
        if (g.color(oe.from) != first_color) continue;
        cplx mid = (g.pos(oe.from) + g.pos(oe.to)) / 2.0;
        double d = std::abs(mid - p);
        if (d < bd) {
            bd = d;
            best = oe.edge;
        }
    }
    if (best == -1) fail(ErrorKind::BadMarkedPoint, "find_marked_edge_near: no candidate edge");
    return best;
}

/// Boundary half-rhombus (by underlying rhombus id) nearest to p after a spin
/// carve of the region; computed on a throwaway carve-independent walk.
inline int find_spin_mark_near(const IsoradialGraph& g, const std::vector<int>& region_ids,
                               cplx p) {
    std::unordered_set<int> region(region_ids.begin(), region_ids.end());
    auto walk = detail::frontier_walk(g, region);
    const int W = static_cast<int>(walk.size());
    int best = -1;
    double bd = 1e300;
    for (int i = 0; i < W; ++i) {
        int v = walk[i].to;
        if (g.color(v) != Color::Black) continue;
        const VertexFan& fan = g.fans[v];
        if (!fan.closed) continue;
        for (const FanEntry& fe : fan.entries) {
            if (region.count(fe.rhombus)) continue;
            const Rhombus& r = g.rh(fe.rhombus);
            cplx mid = (g.pos(r.w1) + g.pos(r.w2)) / 2.0;
            double d = std::abs(mid - p);
            if (d < bd) {
                bd = d;
                best = fe.rhombus;
            }
        }
    }
    if (best == -1) fail(ErrorKind::BadMarkedPoint, "find_spin_mark_near: no candidate");
    return best;
}

}  // namespace isoising

#endif
