#ifndef ISOISING_SHOLO_HPP
#define ISOISING_SHOLO_HPP

#include "isoising/dca.hpp"
#include "isoising/fields.hpp"

namespace isoising {

struct SHolReport {
    double max_residual = 0.0;   // worst |Pr[F(z0);nu] - Pr[F(z1);nu]| over interior edges
    int worst_edge = -1;
    double max_defb = 0.0;       // worst residual of the conjugate-difference form
};

/// Projection-equality test across every interior edge of the domain, plus a
/// cross-check of the equivalent form conj(F1)-conj(F0) = -i(w-u)/delta (F1-F0).
inline SHolReport is_sholomorphic(const DiscreteDomain& dom, const FaceField& f) {
    SHolReport rep;
    const double delta = dom.delta();
    for (int e : dom.interior_edges()) {
        auto ff = dom.edge_faces(e);
        cplx nu = dom.edge_nu(e);
        cplx f0 = f.at(ff[0]), f1 = f.at(ff[1]);
        double res = std::abs(project(f0, nu) - project(f1, nu));
        if (res > rep.max_residual) {
            rep.max_residual = res;
            rep.worst_edge = e;
        }
        const LatticeEdge& le = dom.graph.edges[e];
        cplx d = f1 - f0;
        cplx defb = std::conj(d) + cplx(0, 1) * (dom.graph.pos(le.b) - dom.graph.pos(le.a)) *
                                       d / delta;
        rep.max_defb = std::max(rep.max_defb, std::abs(defb));
    }
    return rep;
}

/// Least-squares recovery of a face value from complex edge values
/// F(xi) = Pr[F(z); nu(xi)] on two or more of its sides.  Returns the value
/// and the worst projection mismatch.
inline std::pair<cplx, double> face_value_from_edges(
    const DiscreteDomain& dom, int face, const std::unordered_map<int, cplx>& edge_values) {
    double m00 = 0, m01 = 0, m11 = 0, r0 = 0, r1 = 0;
    int neq = 0;
    for (const FaceSide& s : dom.sides[face]) {
        auto it = edge_values.find(s.edge);
        if (it == edge_values.end()) continue;
        cplx nu = dom.edge_nu(s.edge);
        double p = std::real(nu), q = std::imag(nu);
        double c = std::real(it->second * std::conj(nu));  // Re(F nubar) target
        m00 += p * p;
        m01 += p * q;
        m11 += q * q;
        r0 += c * p;
        r1 += c * q;
        ++neq;
    }
    if (neq < 2) fail(ErrorKind::MissingFace, "face_value_from_edges: need two edge values");
    double det = m00 * m11 - m01 * m01;
    if (std::abs(det) < 1e-300) fail(ErrorKind::SingularSystem, "face_value_from_edges: parallel directions");
    cplx f((m11 * r0 - m01 * r1) / det, (m00 * r1 - m01 * r0) / det);
    double worst = 0.0;
    for (const FaceSide& s : dom.sides[face]) {
        auto it = edge_values.find(s.edge);
        if (it == edge_values.end()) continue;
        cplx nu = dom.edge_nu(s.edge);
        worst = std::max(worst, std::abs(project(f, nu) - it->second));
    }
    return {f, worst};
}

/// The primitive H = Im int F^2 defined on both sublattices through the
/// cross-edge increments H(u) - H(w) = 2 delta |Pr[F(z); nu]|^2 >= 0.
struct IntegralH {
    VertexField<double> values;
    double loop_residual = 0.0;  // worst increment mismatch over re-visited vertices
    const DiscreteDomain* dom = nullptr;

    double at(int v) const { return values.at(v); }
    bool has(int v) const { return values.has(v); }
    void shift(double c) {
        for (auto& [v, x] : values.values()) x += c;
    }
};

inline double h_cross_increment(const DiscreteDomain& dom, const FaceField& f, int edge) {
    auto ff = dom.edge_faces(edge);
    cplx nu = dom.edge_nu(edge);
    double t0 = std::abs(project(f.at(ff[0]), nu));
    double t1 = ff[1] != -1 ? std::abs(project(f.at(ff[1]), nu)) : t0;
    double t = 0.5 * (t0 + t1);
    return 2.0 * dom.delta() * t * t;
}

inline IntegralH build_H(const DiscreteDomain& dom, const FaceField& f, int base_vertex,
                         double base_value) {
    IntegralH H;
    H.dom = &dom;
    H.values = VertexField<double>(&dom.graph);
    H.values.set(base_vertex, base_value);
    std::queue<int> q;
    q.push(base_vertex);
    std::unordered_map<int, std::vector<std::pair<int, double>>> inc;
    for (int e : dom.domain_edges()) {
        const LatticeEdge& le = dom.graph.edges[e];
        double d = h_cross_increment(dom, f, e);  // H(black) - H(white)
        inc[le.a].push_back({le.b, -d});
        inc[le.b].push_back({le.a, +d});
    }
    while (!q.empty()) {
        int v = q.front();
        q.pop();
        for (auto& [to, d] : inc[v]) {
            if (H.values.has(to)) {
                H.loop_residual = std::max(H.loop_residual,
                                           std::abs(H.values.at(v) + d - H.values.at(to)));
                continue;
            }
            H.values.set(to, H.values.at(v) + d);
            q.push(to);
        }
    }
    return H;
}

/// Same-sublattice increment H(v2)-H(v1) = Im[(v2-v1) F(z)^2]; worst mismatch
/// against the cross-edge construction, over all inner faces.
inline double h_diagonal_residual(const DiscreteDomain& dom, const FaceField& f,
                                  const IntegralH& H) {
    double worst = 0.0;
    for (int fi = 0; fi < dom.n_inner; ++fi) {
        const Rhombus& r = dom.graph.rh(dom.faces[fi].rhombus);
        cplx f2 = f.at(fi) * f.at(fi);
        auto chk = [&](int a, int b) {
            double lhs = H.at(b) - H.at(a);
            double rhs = std::imag((dom.graph.pos(b) - dom.graph.pos(a)) * f2);
            worst = std::max(worst, std::abs(lhs - rhs));
        };
        chk(r.u1, r.u2);
        chk(r.w1, r.w2);
    }
    return worst;
}

/// Discrete Laplacian of H at a domain-interior vertex (all surrounding faces
/// are inner rhombi).
inline double laplacian_H(const DiscreteDomain& dom, const IntegralH& H, int v) {
    return laplacian_apply(dom.graph, H.values, v);
}

/// min/max of the Laplacian sign condition: returns the worst violation of
/// subharmonicity on the black sublattice and superharmonicity on the white.
struct SubSuperReport {
    double worst_black = 0.0;  // most negative Delta H on black interior
    double worst_white = 0.0;  // most positive Delta H on white interior
    int n_black = 0, n_white = 0;
};

inline SubSuperReport check_subsuper(const DiscreteDomain& dom, const IntegralH& H) {
    SubSuperReport rep;
    for (int v : dom.vertices()) {
        if (!dom.vertex_interior(v)) continue;
        double L = laplacian_H(dom, H, v);
        if (dom.graph.color(v) == Color::Black) {
            rep.worst_black = std::min(rep.worst_black, L);
            ++rep.n_black;
        } else {
            rep.worst_white = std::max(rep.worst_white, L);
            ++rep.n_white;
        }
    }
    return rep;
}

// ----------------------------------------------------------------------------
// Quadratic form Q^(n) and its n=3 sum-of-squares form.

inline double qform_eval(const std::vector<double>& thetas, const std::vector<double>& xs) {
    const std::size_t n = thetas.size();
    if (n < 3 || xs.size() != n) fail(ErrorKind::BadAngles, "qform_eval: size mismatch");
    double sum = 0.0;
    for (double t : thetas) {
        if (t <= 0) fail(ErrorKind::BadAngles, "qform_eval: nonpositive angle");
        sum += t;
    }
    if (!near(sum, kPi, 1e-9)) fail(ErrorKind::BadAngles, "qform_eval: angles must sum to pi");
    double Q = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        double x = xs[s], y = xs[(s + 1) % n];
        double cross = (s + 1 == n) ? +2.0 * x * y : -2.0 * x * y;
        Q += (std::cos(thetas[s]) * (x * x + y * y) + cross) / std::sin(thetas[s]);
    }
    return Q;
}

inline double qform_sos3(double a, double b, double c, double x, double y, double z) {
    double sa = std::sin(a), sb = std::sin(b), sc = std::sin(c);
    double t = std::sqrt(sb) / std::sqrt(sa * sc) * x - std::sqrt(sc) / std::sqrt(sa * sb) * y +
               std::sqrt(sa) / std::sqrt(sb * sc) * z;
    return t * t;
}

/// Kernel witness of Q^(n): projections of a constant complex F on the
/// continuously rotated square-root directions around a vertex.
inline std::vector<double> qform_kernel_vector(const std::vector<double>& thetas, cplx F) {
    std::vector<double> xs(thetas.size());
    double phase = 0.3;  // arbitrary start
    for (std::size_t s = 0; s < thetas.size(); ++s) {
        xs[s] = std::real(F * std::exp(cplx(0, -phase)));
        phase += thetas[s];
    }
    return xs;
}

// ----------------------------------------------------------------------------
// Spinors on the double cover of the edge set.

struct SpinorReport {
    double propagation_residual = 0.0;  // worst three-term identity violation
    double sign_flip_error = 0.0;       // |S(xi_{j+4}) + S(xi_j)|
    double reconstruction_error = 0.0;  // |F rebuilt from two lifts - F|
};

/// Walks the eight lifts around every inner rhombus: directions rotate by
/// theta* at black corners and theta at white corners, flipping sign after a
/// full turn.  Checks the propagation equation and reconstructs F.
inline SpinorReport spinor_roundtrip(const DiscreteDomain& dom, const FaceField& f) {
    SpinorReport rep;
    const IsoradialGraph& g = dom.graph;
    for (int fi = 0; fi < dom.n_inner; ++fi) {
        const Rhombus& r = g.rh(dom.faces[fi].rhombus);
        const auto& ss = dom.sides[fi];
        // cycle [u1w1], [w2u1], [u2w2], [w1u2]: shared corners alternate b/w
        const int order[4] = {0, 3, 2, 1};
        double theta_shared[4];  // half-angle at the corner shared with the next edge
        theta_shared[0] = r.theta;          // u1 black
        theta_shared[1] = kPi / 2 - r.theta;  // w2 white
        theta_shared[2] = r.theta;          // u2 black
        theta_shared[3] = kPi / 2 - r.theta;  // w1 white
        cplx F = f.at(fi);

        cplx d = dom.edge_nu(ss[order[0]].edge);
        std::vector<cplx> dirs(9);
        std::vector<double> S(9);
        for (int j = 0; j < 9; ++j) {
            dirs[j] = d;
            S[j] = std::real(F / d);
            // rotation angle to the next lift: pi/2 minus the shared half-angle
            double lam = kPi / 2 - theta_shared[j % 4];
            d *= std::exp(cplx(0, lam));
        }
        for (int j = 0; j + 2 < 9; ++j) {
            double th = theta_shared[j % 4];
            double pred = S[j + 1] / std::cos(th) - std::tan(th) * S[j];
            rep.propagation_residual = std::max(rep.propagation_residual, std::abs(S[j + 2] - pred));
        }
        for (int j = 0; j + 4 < 9; ++j)
            rep.sign_flip_error = std::max(rep.sign_flip_error, std::abs(S[j + 4] + S[j]));
        // reconstruct from lifts 0 and 1
        double p0 = std::real(dirs[0]), q0 = std::imag(dirs[0]);
        double p1 = std::real(dirs[1]), q1 = std::imag(dirs[1]);
        double c0 = S[0] * std::norm(dirs[0]), c1 = S[1] * std::norm(dirs[1]);
        double det = p0 * q1 - p1 * q0;
        cplx rebuilt((c0 * q1 - c1 * q0) / det, (p0 * c1 - p1 * c0) / det);
        rep.reconstruction_error = std::max(rep.reconstruction_error, std::abs(rebuilt - F));
    }
    return rep;
}

// ----------------------------------------------------------------------------
// Decomposition of a holomorphic face field into two s-holomorphic parts.

/// F = F1 + i F2 with both parts s-holomorphic; the free complex constant is
/// pinned by F1(ref_face) = Pr[F(ref_face); ref_dir].
inline std::pair<FaceField, FaceField> decompose(const DiscreteDomain& dom, const FaceField& f,
                                                 int ref_face, cplx ref_dir, double tol = 1e-9) {
    const IsoradialGraph& g = dom.graph;
    // holomorphicity precheck at domain-interior vertices
    RhombusField<cplx> rf(&g);
    for (int fi = 0; fi < dom.n_inner; ++fi) rf.set(dom.faces[fi].rhombus, f.at(fi));
    double scale = std::max(1.0, f.max_abs());
    for (int v : dom.vertices()) {
        if (!dom.vertex_interior(v)) continue;
        if (std::abs(dbar_apply(g, rf, v)) > tol * scale)
            fail(ErrorKind::NotHolomorphic, "decompose: dbar residual above tolerance");
    }

    FaceField f1(&dom);
    std::vector<char> seen(dom.faces.size(), 0);
    f1.set(ref_face, project(f.at(ref_face), ref_dir));
    seen[ref_face] = 1;
    std::queue<int> q;
    q.push(ref_face);
    while (!q.empty()) {
        int cur = q.front();
        q.pop();
        for (const FaceSide& s : dom.sides[cur]) {
            auto ff = dom.edge_faces(s.edge);
            int nxt = ff[0] == cur ? ff[1] : ff[0];
            if (nxt == -1 || seen[nxt]) continue;
            cplx G = f.at(nxt) - f.at(cur);
            cplx sharp = std::conj(G) * cplx(0, 1) *
                         (std::conj(g.pos(s.vw)) - std::conj(g.pos(s.vb))) / g.delta;
            cplx dF1 = 0.5 * (G + sharp);
            f1.set(nxt, f1.at(cur) + dF1);
            seen[nxt] = 1;
            q.push(nxt);
        }
    }
    FaceField f2(&dom);
    for (std::size_t i = 0; i < dom.faces.size(); ++i)
        f2.set(static_cast<int>(i), (f.at(static_cast<int>(i)) - f1.at(static_cast<int>(i))) /
                                        cplx(0, 1));
    return {f1, f2};
}

// ----------------------------------------------------------------------------
// Boundary modification trick.

struct SyntheticPair {
    int face = -1;            // modified boundary half-rhombus
    cplx u_tilde1, u_tilde2;  // synthetic apex-color vertices
    cplx w_tilde;             // synthetic opposite-color vertex on the bisector
    double half_angle = 0.0;  // half-angle of each new rhombus at the apex diagonal
};

struct ModifiedDomain {
    const DiscreteDomain* base = nullptr;
    std::vector<int> arcs_modified;
    std::vector<SyntheticPair> synthetic;
};

/// Replaces every boundary half-rhombus of the selected arcs by two synthetic
/// rhombi with halved apex angles.  Overlapping synthetic rhombi are allowed
/// and recorded as-is.
inline ModifiedDomain modify_boundary(const DiscreteDomain& dom, const std::vector<int>& arc_ids) {
    ModifiedDomain md;
    md.base = &dom;
    md.arcs_modified = arc_ids;
    const IsoradialGraph& g = dom.graph;
    for (int ai : arc_ids) {
        if (ai < 0 || ai >= static_cast<int>(dom.arcs.size()))
            fail(ErrorKind::ArcMismatch, "modify_boundary: no such arc");
        for (int fi : dom.arcs[ai].faces) {
            const Face& face = dom.faces[fi];
            cplx u = g.pos(face.apex), a = g.pos(face.d1), b = g.pos(face.d2);
            cplx e1 = (a - u) / g.delta, e2 = (b - u) / g.delta;
            cplx m = e1 + e2;
            m /= std::abs(m);
            SyntheticPair sp;
            sp.face = fi;
            sp.w_tilde = u + g.delta * m;
            sp.u_tilde1 = u + g.delta * (e1 + m);
            sp.u_tilde2 = u + g.delta * (e2 + m);
            sp.half_angle = 0.5 * g.half_angle_at(face.rhombus, face.apex);
            md.synthetic.push_back(sp);
        }
    }
    return md;
}

struct BoundaryTrickCheck {
    double lhs = 0.0;  // 2 tan(theta/2) (H(u~) - H(u_int)) summed over the pair
    double rhs = 0.0;  // -2 delta sin(theta) |F(zeta)|^2
    double via_fourth = 0.0;  // tan(theta) Im[F(zeta)^2 (u_out - u_int)]
    double parallel_defect = 0.0;  // |Im[F^2 (d2-d1)]|, zero when F || tau^{-1/2}
};

/// Laplacian-contribution identity of the trick at one boundary half-rhombus,
/// evaluated directly from the field value at the half-rhombus.  The sign is
/// negative on white arcs (subharmonic deficit at the black apex) and
/// positive on black arcs.
inline BoundaryTrickCheck boundary_trick_check(const DiscreteDomain& dom, const FaceField& f,
                                               int face_idx) {
    const Face& face = dom.faces[face_idx];
    const IsoradialGraph& g = dom.graph;
    cplx F = f.at(face_idx);
    cplx u = g.pos(face.apex), a = g.pos(face.d1), b = g.pos(face.d2);
    double eta = g.half_angle_at(face.rhombus, face.apex);
    // H(apex-color) - H(diag-color) = +-2 delta cos^2(eta/2) |F|^2 across the
    // two apex edges; the synthetic vertices copy the diagonal values.
    double drop = 2.0 * g.delta * std::cos(eta / 2) * std::cos(eta / 2) * std::norm(F);
    double sgn = g.color(face.apex) == Color::Black ? -1.0 : +1.0;
    BoundaryTrickCheck out;
    out.lhs = sgn * 2.0 * std::tan(eta / 2) * drop;
    out.rhs = sgn * 2.0 * g.delta * std::sin(eta) * std::norm(F);
    cplx u_out = a + b - u;
    out.via_fourth = std::tan(eta) * std::imag(F * F * (u_out - u));
    out.parallel_defect = std::abs(std::imag(F * F * (b - a)));
    return out;
}

}  // namespace isoising

#endif
