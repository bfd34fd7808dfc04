#ifndef ISOISING_DCA_HPP
#define ISOISING_DCA_HPP

#include <queue>
#include <unordered_set>

#include "isoising/fields.hpp"
#include "isoising/linalg.hpp"

namespace isoising {

/// mu(u) * Laplacian weight form: [Delta H](u) = (1/mu) sum tan(theta_s) (H(u_s) - H(u)).
template <class T>
T laplacian_apply(const IsoradialGraph& g, const VertexField<T>& h, int u) {
    const VertexFan& fan = g.fans[u];
    if (!fan.closed) fail(ErrorKind::MissingNeighbor, "laplacian_apply: open fan");
    if (!h.has(u)) fail(ErrorKind::MissingVertex, "laplacian_apply: center value missing");
    T acc{};
    for (const FanEntry& e : fan.entries) {
        if (!h.has(e.opposite)) fail(ErrorKind::MissingNeighbor, "laplacian_apply: neighbor missing");
        acc += std::tan(g.half_angle_at(e.rhombus, u)) * (h.at(e.opposite) - h.at(u));
    }
    return acc / g.mu(u);
}

/// Subdomain of one sublattice: `interior` vertices have all their same-color
/// neighbors in the vertex set, `boundary` is the one-step exit layer.
struct LatticeRegion {
    const IsoradialGraph* g = nullptr;
    Color color = Color::Black;
    std::vector<int> interior;
    std::vector<int> boundary;
    std::unordered_map<int, int> index;  // interior vertex -> solver index

    bool is_interior(int v) const { return index.count(v) != 0; }
};

inline LatticeRegion make_region(const IsoradialGraph& g, Color color,
                                 const std::vector<int>& verts) {
    LatticeRegion r;
    r.g = &g;
    r.color = color;
    std::unordered_set<int> inset;
    for (int v : verts)
        if (g.color(v) == color) inset.insert(v);
    std::unordered_set<int> bset;
    for (int v : inset) {
        const VertexFan& fan = g.fans[v];
        if (!fan.closed) continue;
        bool inner = true;
        for (const FanEntry& e : fan.entries)
            if (!inset.count(e.opposite)) inner = false;
        if (inner) {
            r.index.emplace(v, static_cast<int>(r.interior.size()));
            r.interior.push_back(v);
        }
    }
    for (int v : r.interior)
        for (const FanEntry& e : g.fans[v].entries)
            if (!r.index.count(e.opposite)) bset.insert(e.opposite);
    r.boundary.assign(bset.begin(), bset.end());
    std::sort(r.boundary.begin(), r.boundary.end());
    return r;
}

inline LatticeRegion disc_region(const IsoradialGraph& g, Color color, int center, double radius) {
    std::vector<int> vs;
    for (const Vertex& v : g.vertices)
        if (v.color == color && std::abs(v.pos - g.pos(center)) <= radius) vs.push_back(v.id);
    return make_region(g, color, vs);
}

inline LatticeRegion rect_region(const IsoradialGraph& g, Color color, double x0, double x1,
                                 double y0, double y1) {
    std::vector<int> vs;
    for (const Vertex& v : g.vertices) {
        double x = std::real(v.pos), y = std::imag(v.pos);
        if (v.color == color && x > x0 && x < x1 && y > y0 && y < y1) vs.push_back(v.id);
    }
    return make_region(g, color, vs);
}

/// Region whose interior is every same-color vertex inside the rectangle and
/// whose boundary is the first exit layer outside it (the random-walk
/// discretization convention).
inline LatticeRegion closed_rect_region(const IsoradialGraph& g, Color color, double x0,
                                        double x1, double y0, double y1) {
    std::vector<int> vs;
    std::unordered_set<int> vset;
    for (const Vertex& v : g.vertices) {
        double x = std::real(v.pos), y = std::imag(v.pos);
        if (v.color == color && x > x0 && x < x1 && y > y0 && y < y1) {
            vs.push_back(v.id);
            vset.insert(v.id);
        }
    }
    std::vector<int> all(vs);
    for (int v : vs)
        for (const FanEntry& e : g.fans[v].entries)
            if (!vset.count(e.opposite)) {
                vset.insert(e.opposite);
                all.push_back(e.opposite);
            }
    return make_region(g, color, all);
}

/// Factorizes the interior Laplacian once for repeated boundary-data solves.
class DirichletOperator {
  public:
    explicit DirichletOperator(const LatticeRegion& r) : r_(&r) {
        const IsoradialGraph& g = *r.g;
        const int n = static_cast<int>(r.interior.size());
        std::vector<Eigen::Triplet<double>> trips;
        bcoup_.resize(n);
        for (int i = 0; i < n; ++i) {
            int v = r.interior[i];
            double diag = 0.0;
            for (const FanEntry& e : g.fans[v].entries) {
                double w = std::tan(g.half_angle_at(e.rhombus, v));
                diag += w;
                auto it = r.index.find(e.opposite);
                if (it != r.index.end())
                    trips.emplace_back(i, it->second, -w);
                else
                    bcoup_[i].push_back({e.opposite, w});
            }
            trips.emplace_back(i, i, diag);
        }
        Eigen::SparseMatrix<double> A(n, n);
        A.setFromTriplets(trips.begin(), trips.end());
        ldlt_.compute(A);
        if (ldlt_.info() != Eigen::Success)
            fail(ErrorKind::SingularSystem, "DirichletOperator: factorization failed");
    }

    VertexField<double> solve(const VertexField<double>& bvals) const {
        const int n = static_cast<int>(r_->interior.size());
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n; ++i)
            for (auto [bv, w] : bcoup_[i]) rhs[i] += w * bvals.at(bv);
        Eigen::VectorXd x = ldlt_.solve(rhs);
        VertexField<double> out(r_->g);
        for (int i = 0; i < n; ++i) out.set(r_->interior[i], x[i]);
        for (int v : r_->boundary) out.set(v, bvals.at(v));
        return out;
    }

  private:
    const LatticeRegion* r_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
    std::vector<std::vector<std::pair<int, double>>> bcoup_;
};

/// Solves Delta H = 0 on the interior given values on the boundary layer.
inline VertexField<double> solve_dirichlet(const LatticeRegion& r,
                                           const VertexField<double>& bvals) {
    const IsoradialGraph& g = *r.g;
    const int n = static_cast<int>(r.interior.size());
    SpdSolver solver;
    solver.begin(n);
    for (int i = 0; i < n; ++i) {
        int v = r.interior[i];
        double diag = 0.0;
        for (const FanEntry& e : g.fans[v].entries) {
            double w = std::tan(g.half_angle_at(e.rhombus, v));
            diag += w;
            auto it = r.index.find(e.opposite);
            if (it != r.index.end())
                solver.add(i, it->second, -w);
            else
                solver.add_rhs(i, w * bvals.at(e.opposite));
        }
        solver.add(i, i, diag);
    }
    Eigen::VectorXd x = solver.solve();
    VertexField<double> out(&g);
    for (int i = 0; i < n; ++i) out.set(r.interior[i], x[i]);
    for (int v : r.boundary) out.set(v, bvals.at(v));
    return out;
}

/// Harmonic measure of E (subset of the boundary layer) as a field on the region.
inline VertexField<double> harmonic_measure_field(const LatticeRegion& r,
                                                  const std::vector<int>& E) {
    std::unordered_set<int> eset(E.begin(), E.end());
    VertexField<double> b(r.g);
    for (int v : r.boundary) b.set(v, eset.count(v) ? 1.0 : 0.0);
    return solve_dirichlet(r, b);
}

inline double harmonic_measure(const LatticeRegion& r, const std::vector<int>& E, int u) {
    if (!r.is_interior(u)) fail(ErrorKind::MissingVertex, "harmonic_measure: u not interior");
    return harmonic_measure_field(r, E).at(u);
}

/// Green's function with pole u: zero boundary values, mu(u) * Delta G (u) = 1.
inline VertexField<double> green_function(const LatticeRegion& r, int u) {
    const IsoradialGraph& g = *r.g;
    if (!r.is_interior(u)) fail(ErrorKind::MissingVertex, "green_function: pole not interior");
    const int n = static_cast<int>(r.interior.size());
    SpdSolver solver;
    solver.begin(n);
    for (int i = 0; i < n; ++i) {
        int v = r.interior[i];
        double diag = 0.0;
        for (const FanEntry& e : g.fans[v].entries) {
            double w = std::tan(g.half_angle_at(e.rhombus, v));
            diag += w;
            auto it = r.index.find(e.opposite);
            if (it != r.index.end()) solver.add(i, it->second, -w);
        }
        solver.add(i, i, diag);
    }
    solver.add_rhs(r.index.at(u), -1.0);
    Eigen::VectorXd x = solver.solve();
    VertexField<double> out(&g);
    for (int i = 0; i < n; ++i) out.set(r.interior[i], x[i]);
    for (int v : r.boundary) out.set(v, 0.0);
    return out;
}

/// Discrete dbar derivative at a Lambda-vertex:
/// [dbar F](u) = -i/(2 mu(u)) sum_s (w_{s+1} - w_s) F(z_s).
template <class T>
cplx dbar_apply(const IsoradialGraph& g, const RhombusField<T>& f, int u) {
    const VertexFan& fan = g.fans[u];
    if (!fan.closed) fail(ErrorKind::MissingFace, "dbar_apply: open fan");
    cplx acc(0, 0);
    const std::size_t n = fan.entries.size();
    for (std::size_t s = 0; s < n; ++s) {
        const FanEntry& e = fan.entries[s];
        const FanEntry& nx = fan.entries[(s + 1) % n];
        if (!f.has(e.rhombus)) fail(ErrorKind::MissingFace, "dbar_apply: face value missing");
        acc += (g.pos(nx.nbr) - g.pos(e.nbr)) * cplx(f.at(e.rhombus));
    }
    return cplx(0, -1) / (2.0 * g.mu(u)) * acc;
}

/// Discrete d derivative at a rhombus center from values on all four corners:
/// [d H](z) = (1/2) [ (H(u1)-H(u2))/(u1-u2) + (H(w1)-H(w2))/(w1-w2) ].
template <class T>
cplx pa_apply(const IsoradialGraph& g, const VertexField<T>& h, int z) {
    const Rhombus& r = g.rh(z);
    for (int v : {r.u1, r.u2, r.w1, r.w2})
        if (!h.has(v)) fail(ErrorKind::MissingVertex, "pa_apply: corner value missing");
    cplx du = (cplx(h.at(r.u1)) - cplx(h.at(r.u2))) / (g.pos(r.u1) - g.pos(r.u2));
    cplx dw = (cplx(h.at(r.w1)) - cplx(h.at(r.w2))) / (g.pos(r.w1) - g.pos(r.w2));
    return 0.5 * (du + dw);
}

/// Max |dbar f| over the interior Lambda-vertices of a rhombus set.
inline double max_dbar_residual(const IsoradialGraph& g, const RhombusField<cplx>& f,
                                const std::vector<int>& region) {
    std::unordered_set<int> rset(region.begin(), region.end());
    std::unordered_set<int> verts;
    for (int z : region) {
        const Rhombus& r = g.rh(z);
        for (int v : {r.u1, r.w1, r.u2, r.w2}) verts.insert(v);
    }
    double worst = 0.0;
    for (int v : verts) {
        const VertexFan& fan = g.fans[v];
        if (!fan.closed) continue;
        bool interior = true;
        for (const FanEntry& e : fan.entries)
            if (!rset.count(e.rhombus)) interior = false;
        if (!interior) continue;
        worst = std::max(worst, std::abs(dbar_apply(g, f, v)));
    }
    return worst;
}

/// Discrete primitive H = int f(z) dz over a simply connected rhombus set:
/// H(v2) - H(v1) = f(z) (v2 - v1) along both diagonals of every face.  The two
/// sublattice components are pinned by the two supplied base values.
inline VertexField<cplx> primitive(const IsoradialGraph& g, const std::vector<int>& region,
                                   const RhombusField<cplx>& f, int base_black, cplx val_black,
                                   int base_white, cplx val_white, double tol = 1e-10) {
    double scale = 0.0;
    for (int z : region) scale = std::max(scale, std::abs(f.at(z)));
    double res = max_dbar_residual(g, f, region);
    if (res > tol * std::max(1.0, scale))
        fail(ErrorKind::NotHolomorphic, "primitive: dbar residual above tolerance");

    VertexField<cplx> h(&g);
    h.set(base_black, val_black);
    h.set(base_white, val_white);
    // BFS over diagonal increments of both sublattices
    std::queue<int> q;
    q.push(base_black);
    q.push(base_white);
    std::unordered_map<int, std::vector<std::pair<int, cplx>>> diag;  // v -> (v', f(z)(v'-v))
    for (int z : region) {
        const Rhombus& r = g.rh(z);
        cplx fv = f.at(z);
        auto link = [&](int a, int b) {
            cplx inc = fv * (g.pos(b) - g.pos(a));
            diag[a].push_back({b, inc});
            diag[b].push_back({a, -inc});
        };
        link(r.u1, r.u2);
        link(r.w1, r.w2);
    }
    double worst_gap = 0.0;
    while (!q.empty()) {
        int v = q.front();
        q.pop();
        for (auto& [to, inc] : diag[v]) {
            if (h.has(to)) {
                worst_gap = std::max(worst_gap, std::abs(h.at(v) + inc - h.at(to)));
                continue;
            }
            h.set(to, h.at(v) + inc);
            q.push(to);
        }
    }
    double hscale = 0.0;
    for (auto& [v, x] : h.values()) hscale = std::max(hscale, std::abs(x));
    if (worst_gap > tol * std::max(1.0, hscale))
        fail(ErrorKind::NonClosedForm, "primitive: loop increments do not close");
    return h;
}

}  // namespace isoising

#endif
