#ifndef ISOISING_LATTICE_HPP
#define ISOISING_LATTICE_HPP

#include <algorithm>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "isoising/base.hpp"
#include "isoising/rng.hpp"

namespace isoising {

enum class Color : std::uint8_t { Black, White };  // Black = primal graph, White = dual

inline Color other(Color c) { return c == Color::Black ? Color::White : Color::Black; }

struct Vertex {
    int id = -1;
    cplx pos;
    Color color = Color::Black;
};

/// Rhombus with corners (u1, w1, u2, w2) in counterclockwise order; u* black,
/// w* white.  theta is the half-angle at the black corners, so
/// tan(theta) = |w2 - w1| / |u2 - u1|.
struct Rhombus {
    int id = -1;
    int u1 = -1, w1 = -1, u2 = -1, w2 = -1;
    cplx center;
    double theta = 0.0;

    int corner(int k) const {
        switch (k & 3) {
            case 0: return u1;
            case 1: return w1;
            case 2: return u2;
            default: return w2;
        }
    }
};

struct LatticeEdge {
    int a = -1, b = -1;     // endpoint vertex ids (a black, b white)
    int face0 = -1, face1 = -1;  // incident rhombi (face1 == -1 on the rim)
};

/// One wedge of the counterclockwise fan around a vertex v: the rhombus
/// `rhombus` spans the wedge from neighbor `nbr` (shared with the previous
/// wedge) to the next wedge's `nbr`; `opposite` is the same-color vertex at
/// the far end of the diagonal through v.
struct FanEntry {
    int rhombus = -1;
    int nbr = -1;
    int opposite = -1;
};

struct VertexFan {
    std::vector<FanEntry> entries;  // ccw order
    bool closed = false;            // wedges cover the full turn around v
};

class IsoradialGraph {
  public:
    double delta = 1.0;
    double eta = 0.0;
    std::vector<Vertex> vertices;
    std::vector<Rhombus> rhombi;
    std::vector<LatticeEdge> edges;
    std::vector<VertexFan> fans;

    cplx pos(int v) const { return vertices[v].pos; }
    Color color(int v) const { return vertices[v].color; }
    const Rhombus& rh(int z) const { return rhombi[z]; }

    int edge_between(int a, int b) const {
        auto it = edge_index_.find(edge_key(a, b));
        return it == edge_index_.end() ? -1 : it->second;
    }

    /// Half-angle of rhombus z seen from the diagonal through vertex v.
    double half_angle_at(int z, int v) const {
        const Rhombus& r = rhombi[z];
        return color(v) == Color::Black ? r.theta : kPi / 2 - r.theta;
    }

    /// Weight mu(v) = (1/2) delta^2 sum_s sin(2 theta_s) of the fan around v.
    double mu(int v) const {
        double s = 0.0;
        for (const FanEntry& e : fans[v].entries) s += std::sin(2.0 * rhombi[e.rhombus].theta);
        return 0.5 * delta * delta * s;
    }

    /// Same-color neighbors of v together with conductances tan(theta_s).
    /// Requires a closed fan.
    std::vector<std::pair<int, double>> star_neighbors(int v) const {
        std::vector<std::pair<int, double>> out;
        out.reserve(fans[v].entries.size());
        for (const FanEntry& e : fans[v].entries)
            out.emplace_back(e.opposite, std::tan(half_angle_at(e.rhombus, v)));
        return out;
    }

    void rotate(cplx unit) {
        for (auto& v : vertices) v.pos *= unit;
        for (auto& r : rhombi) r.center *= unit;
    }

    void finalize() {
        build_edges();
        build_fans();
    }

    static std::int64_t edge_key(int a, int b) {
        if (a > b) std::swap(a, b);
        return (static_cast<std::int64_t>(a) << 32) | static_cast<std::int64_t>(b);
    }

  private:
    std::unordered_map<std::int64_t, int> edge_index_;

    void build_edges() {
        edges.clear();
        edge_index_.clear();
        auto add_side = [&](int u, int w, int face) {
            std::int64_t key = edge_key(u, w);
            auto it = edge_index_.find(key);
            if (it == edge_index_.end()) {
                LatticeEdge e;
                e.a = color(u) == Color::Black ? u : w;
                e.b = color(u) == Color::Black ? w : u;
                e.face0 = face;
                edge_index_.emplace(key, static_cast<int>(edges.size()));
                edges.push_back(e);
            } else {
                edges[it->second].face1 = face;
            }
        };
        for (const Rhombus& r : rhombi) {
            add_side(r.u1, r.w1, r.id);
            add_side(r.w1, r.u2, r.id);
            add_side(r.u2, r.w2, r.id);
            add_side(r.w2, r.u1, r.id);
        }
    }

    void build_fans() {
        fans.assign(vertices.size(), {});
        std::vector<std::vector<int>> incident(vertices.size());
        for (const Rhombus& r : rhombi)
            for (int k = 0; k < 4; ++k) incident[r.corner(k)].push_back(r.id);

        for (std::size_t v = 0; v < vertices.size(); ++v) {
            auto& fan = fans[v];
            cplx p = vertices[v].pos;
            std::vector<FanEntry> ent;
            for (int z : incident[v]) {
                const Rhombus& r = rhombi[z];
                int k = 0;
                while (r.corner(k) != static_cast<int>(v)) ++k;
                int after = r.corner(k + 1);   // ccw-next corner: first in the wedge
                int opp = r.corner(k + 2);
                ent.push_back({z, after, opp});
            }
            std::sort(ent.begin(), ent.end(), [&](const FanEntry& x, const FanEntry& y) {
                return std::arg(vertices[x.nbr].pos - p) < std::arg(vertices[y.nbr].pos - p);
            });
            fan.entries = std::move(ent);
            fan.closed = !fan.entries.empty();
            for (std::size_t s = 0; s < fan.entries.size(); ++s) {
                const Rhombus& r = rhombi[fan.entries[s].rhombus];
                int k = 0;
                while (r.corner(k) != static_cast<int>(v)) ++k;
                int before = r.corner(k + 3);  // ccw-previous corner: closes the wedge
                int next_first = fan.entries[(s + 1) % fan.entries.size()].nbr;
                if (before != next_first) fan.closed = false;
            }
        }
    }
};

/// Generic rhombic lattice spanned by two unit-vector train-track sequences:
/// vertex(i,j) = delta * (sum_{k<i} e^{i alpha_k} + sum_{k<j} e^{i beta_k}),
/// rhombus(i,j) spanned by e^{i alpha_i} and e^{i beta_j}.
inline IsoradialGraph build_rhombic(double delta, const std::vector<double>& alphas,
                                    const std::vector<double>& betas, double eta) {
    if (delta <= 0.0) fail(ErrorKind::BadInput, "build_rhombic: delta must be positive");
    if (alphas.empty() || betas.empty())
        fail(ErrorKind::BadInput, "build_rhombic: empty direction sequence");
    const int nx = static_cast<int>(alphas.size());
    const int ny = static_cast<int>(betas.size());

    auto track_angle = [&](int i, int j) {
        double d = betas[j] - alphas[i];
        d = std::fmod(d, 2.0 * kPi);
        if (d < 0) d += 2.0 * kPi;
        return d;  // ccw angle from e^{i alpha_i} to e^{i beta_j}
    };
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            double d = track_angle(i, j);
            if (d < eta - 1e-14 || d > kPi - eta + 1e-14)
                fail(ErrorKind::AngleBoundViolation,
                     "build_rhombic: rhombus angle outside [eta, pi - eta]");
        }

    IsoradialGraph g;
    g.delta = delta;
    g.eta = eta;
    std::vector<cplx> ax(nx + 1, 0.0), by(ny + 1, 0.0);
    for (int i = 0; i < nx; ++i) ax[i + 1] = ax[i] + std::polar(delta, alphas[i]);
    for (int j = 0; j < ny; ++j) by[j + 1] = by[j] + std::polar(delta, betas[j]);

    auto vid = [&](int i, int j) { return i * (ny + 1) + j; };
    g.vertices.resize(static_cast<std::size_t>(nx + 1) * (ny + 1));
    for (int i = 0; i <= nx; ++i)
        for (int j = 0; j <= ny; ++j) {
            Vertex v;
            v.id = vid(i, j);
            v.pos = ax[i] + by[j];
            v.color = ((i + j) % 2 == 0) ? Color::Black : Color::White;
            g.vertices[v.id] = v;
        }

    g.rhombi.reserve(static_cast<std::size_t>(nx) * ny);
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            Rhombus r;
            r.id = static_cast<int>(g.rhombi.size());
            int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
            double ang = track_angle(i, j);  // corner angle at (i,j) and (i+1,j+1)
            if (g.vertices[a].color == Color::Black) {
                r.u1 = a, r.w1 = b, r.u2 = c, r.w2 = d;
                r.theta = ang / 2.0;
            } else {
                r.u1 = b, r.w1 = c, r.u2 = d, r.w2 = a;
                r.theta = (kPi - ang) / 2.0;
            }
            r.center = (g.vertices[a].pos + g.vertices[c].pos) / 2.0;
            g.rhombi.push_back(r);
        }

    g.finalize();
    return g;
}

/// Square lattice: nx-by-ny grid of rhombi with theta = pi/4 everywhere.
inline IsoradialGraph build_square(double delta, int nx, int ny) {
    if (nx < 1 || ny < 1) fail(ErrorKind::BadInput, "build_square: need nx, ny >= 1");
    return build_rhombic(delta, std::vector<double>(nx, 0.0),
                         std::vector<double>(ny, kPi / 2), kPi / 2);
}

/// Random rhombic lattice: both track sequences jittered by +-jitter around
/// the square-lattice directions, giving eta = pi/2 - 2 jitter.
inline IsoradialGraph build_random_rhombic(double delta, int nx, int ny, double jitter,
                                           std::uint64_t seed) {
    if (jitter < 0 || jitter >= kPi / 4)
        fail(ErrorKind::BadInput, "build_random_rhombic: jitter out of range");
    SplitMix64 rng(seed);
    std::vector<double> alphas(nx), betas(ny);
    for (double& a : alphas) a = rng.uniform(-jitter, jitter);
    for (double& b : betas) b = kPi / 2 + rng.uniform(-jitter, jitter);
    return build_rhombic(delta, alphas, betas, kPi / 2 - 2 * jitter);
}

/// Checks every structural invariant; throws on the first violation.
inline void validate(const IsoradialGraph& g, double rtol = kGeomTol) {
    const double d = g.delta;
    for (const Rhombus& r : g.rhombi) {
        cplx pu1 = g.pos(r.u1), pw1 = g.pos(r.w1), pu2 = g.pos(r.u2), pw2 = g.pos(r.w2);
        for (cplx side : {pw1 - pu1, pu2 - pw1, pw2 - pu2, pu1 - pw2})
            if (!near_rel(std::abs(side), d, rtol))
                fail(ErrorKind::BadInput, "validate: rhombus side length != delta");
        double tan_ratio = std::abs(pw2 - pw1) / std::abs(pu2 - pu1);
        if (!near_rel(std::tan(r.theta), tan_ratio, 1e-9))
            fail(ErrorKind::BadInput, "validate: tan(theta) != |w2-w1|/|u2-u1|");
        for (double ang : {2.0 * r.theta, kPi - 2.0 * r.theta})
            if (ang < g.eta - 1e-12 || ang > kPi - g.eta + 1e-12)
                fail(ErrorKind::AngleBoundViolation, "validate: rhombus angle outside bound");
        if (g.color(r.u1) != Color::Black || g.color(r.u2) != Color::Black ||
            g.color(r.w1) != Color::White || g.color(r.w2) != Color::White)
            fail(ErrorKind::BadInput, "validate: rhombus corner colors wrong");
        // ccw orientation
        if (std::imag((pw1 - pu1) * std::conj(pw2 - pu1)) > 0)
            fail(ErrorKind::BadInput, "validate: rhombus not counterclockwise");
        if (!near_rel(std::abs(r.center - (pu1 + pu2) / 2.0), 0.0, rtol))
            fail(ErrorKind::BadInput, "validate: rhombus center off the diagonal midpoint");
    }
    for (const LatticeEdge& e : g.edges) {
        if (g.color(e.a) == g.color(e.b))
            fail(ErrorKind::BadInput, "validate: edge joins same-color vertices");
        if (!near_rel(std::abs(g.pos(e.a) - g.pos(e.b)), d, rtol))
            fail(ErrorKind::BadInput, "validate: edge length != delta");
    }
    for (std::size_t v = 0; v < g.vertices.size(); ++v) {
        const VertexFan& fan = g.fans[v];
        if (!fan.closed) continue;
        double total = 0.0;
        for (const FanEntry& e : fan.entries) total += 2.0 * g.half_angle_at(e.rhombus, static_cast<int>(v));
        if (!near(total, 2.0 * kPi, 1e-9))
            fail(ErrorKind::BadInput, "validate: closed fan angles do not sum to 2 pi");
    }
}

/// Area of the polygon through the Lambda-neighbors of v (closed fan only).
inline double fan_polygon_area(const IsoradialGraph& g, int v) {
    const VertexFan& fan = g.fans[v];
    double a2 = 0.0;
    std::size_t n = fan.entries.size();
    for (std::size_t s = 0; s < n; ++s) {
        cplx p = g.pos(fan.entries[s].nbr);
        cplx q = g.pos(fan.entries[(s + 1) % n].nbr);
        a2 += std::real(p) * std::imag(q) - std::real(q) * std::imag(p);
    }
    return 0.5 * a2;
}

}  // namespace isoising

#endif
