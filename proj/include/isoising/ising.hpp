#ifndef ISOISING_ISING_HPP
#define ISOISING_ISING_HPP

#include <bit>
#include <cstdint>
#include <optional>

#include "isoising/sholo.hpp"

namespace isoising {

// ----------------------------------------------------------------------------
// Loop representation of the FK model.
//
// Each inner rhombus carries one bit: OPEN (primal edge u1-u2 open, strands
// hug the white corners, weight sin(theta/2)) or DUAL (dual edge w1-w2 open,
// strands hug the black corners, weight sin(theta*/2)).  Boundary half-rhombi
// have a single forced strand around the apex.  Strands cross every lattice
// edge in the canonical direction i(w-u)/delta, which keeps black vertices on
// the left.

struct LoopMachine {
    const DiscreteDomain* dom = nullptr;
    std::vector<int> edge_ids;                 // dense index -> graph edge id
    std::unordered_map<int, int> edge_dense;   // graph edge id -> dense index
    struct FaceLocal {
        int n = 0;
        int eidx[4] = {-1, -1, -1, -1};
        int pair_open[4] = {0, 0, 0, 0};
        int pair_dual[4] = {0, 0, 0, 0};
        double w_open = 1.0, w_dual = 1.0;
        cplx tdir[4];
    };
    std::vector<FaceLocal> locals;
    std::vector<int> edge_face0, edge_face1;   // dense edge -> face indices
    std::vector<int> marked_dense;             // dense edge index per marked point

    explicit LoopMachine(const DiscreteDomain& d) : dom(&d) {
        for (int e : d.domain_edges()) {
            edge_dense.emplace(e, static_cast<int>(edge_ids.size()));
            edge_ids.push_back(e);
        }
        edge_face0.assign(edge_ids.size(), -1);
        edge_face1.assign(edge_ids.size(), -1);
        locals.resize(d.faces.size());
        for (std::size_t f = 0; f < d.faces.size(); ++f) {
            FaceLocal& L = locals[f];
            const auto& ss = d.sides[f];
            L.n = static_cast<int>(ss.size());
            for (int k = 0; k < L.n; ++k) {
                L.eidx[k] = edge_dense.at(ss[k].edge);
                L.tdir[k] = d.edge_cross_dir(ss[k].edge);
                int de = L.eidx[k];
                (edge_face0[de] == -1 ? edge_face0[de] : edge_face1[de]) = static_cast<int>(f);
            }
            if (d.faces[f].kind == FaceKind::Inner) {
                double th = d.graph.rh(d.faces[f].rhombus).theta;
                L.w_open = std::sin(th / 2);
                L.w_dual = std::sin((kPi / 2 - th) / 2);
                // OPEN hugs w1 and w2: sides (0,1) and (2,3); DUAL hugs u2, u1
                L.pair_open[0] = 1, L.pair_open[1] = 0, L.pair_open[2] = 3, L.pair_open[3] = 2;
                L.pair_dual[0] = 3, L.pair_dual[1] = 2, L.pair_dual[2] = 1, L.pair_dual[3] = 0;
            } else {
                L.pair_open[0] = 1, L.pair_open[1] = 0;
                L.pair_dual[0] = 1, L.pair_dual[1] = 0;
            }
        }
        for (const MarkedEdge& m : d.marked) marked_dense.push_back(edge_dense.at(m.edge));
    }

    int partner(int face, int side, std::uint64_t bits) const {
        const FaceLocal& L = locals[face];
        bool dual = dom->is_inner_face(face) && ((bits >> face) & 1);
        return dual ? L.pair_dual[side] : L.pair_open[side];
    }

    int side_of_edge(int face, int dense_edge) const {
        const FaceLocal& L = locals[face];
        for (int k = 0; k < L.n; ++k)
            if (L.eidx[k] == dense_edge) return k;
        fail(ErrorKind::TraceError, "LoopMachine: edge not on face");
    }

    double config_weight(std::uint64_t bits) const {
        double w = 1.0;
        for (int f = 0; f < dom->n_inner; ++f)
            w *= ((bits >> f) & 1) ? locals[f].w_dual : locals[f].w_open;
        return w;
    }

    /// Number of strand components; fills comp with the union-find roots.
    int components(std::uint64_t bits, std::vector<int>& uf) const {
        const int E = static_cast<int>(edge_ids.size());
        uf.resize(E);
        for (int i = 0; i < E; ++i) uf[i] = i;
        auto find = [&](int x) {
            while (uf[x] != x) x = uf[x] = uf[uf[x]];
            return x;
        };
        for (std::size_t f = 0; f < locals.size(); ++f) {
            const FaceLocal& L = locals[f];
            for (int k = 0; k < L.n; ++k) {
                int p = partner(static_cast<int>(f), k, bits);
                if (p > k) {
                    int a = find(L.eidx[k]), b = find(L.eidx[p]);
                    if (a != b) uf[a] = b;
                }
            }
        }
        int c = 0;
        for (int i = 0; i < E; ++i)
            if (find(i) == i) ++c;
        return c;
    }
};

struct InterfaceTrace {
    std::vector<int> edges;        // graph edge ids in crossing order
    std::vector<double> wind_at;   // accumulated turning at each crossing
    double total_wind = 0.0;       // turning from the first to the last crossing
    int end_marked = -1;           // index into dom.marked of the exit edge
};

/// Traces the interface entering at marked point `start` under configuration
/// `bits`; turning angles are accumulated as real numbers, never reduced.
inline InterfaceTrace trace_interface(const LoopMachine& M, std::uint64_t bits, int start = 0) {
    const DiscreteDomain& dom = *M.dom;
    InterfaceTrace tr;
    int cur = M.marked_dense[start];
    double wind = 0.0;
    cplx tcur = dom.edge_cross_dir(M.edge_ids[cur]);
    int prev_face = -1;
    tr.edges.push_back(M.edge_ids[cur]);
    tr.wind_at.push_back(0.0);
    for (std::size_t guard = 0; guard <= M.edge_ids.size() + 2; ++guard) {
        int face = M.edge_face0[cur] != prev_face ? M.edge_face0[cur] : M.edge_face1[cur];
        if (face == -1) {
            for (std::size_t k = 0; k < dom.marked.size(); ++k)
                if (M.marked_dense[k] == cur) tr.end_marked = static_cast<int>(k);
            if (tr.end_marked == -1)
                fail(ErrorKind::TraceError, "trace_interface: strand exited at a non-marked edge");
            tr.total_wind = wind;
            return tr;
        }
        int side = M.side_of_edge(face, cur);
        int out = M.partner(face, side, bits);
        int nxt = M.locals[face].eidx[out];
        cplx tnext = M.locals[face].tdir[out];
        wind += turn_angle(tcur, tnext);
        tcur = tnext;
        prev_face = face;
        cur = nxt;
        tr.edges.push_back(M.edge_ids[cur]);
        tr.wind_at.push_back(wind);
    }
    fail(ErrorKind::TraceError, "trace_interface: no marked exit reached");
}

/// Public form of the interface extraction for a given configuration.
inline InterfaceTrace extract_interface(const DiscreteDomain& dom, std::uint64_t config_bits,
                                        int start_marked = 0) {
    LoopMachine M(dom);
    return trace_interface(M, config_bits, start_marked);
}

/// Total turning of every loop (non-interface strand) in a configuration;
/// each closed strand crosses its edges once, so the walk ends on return.
inline std::vector<double> loop_windings(const DiscreteDomain& dom, std::uint64_t bits) {
    LoopMachine M(dom);
    const int E = static_cast<int>(M.edge_ids.size());
    std::vector<char> seen(E, 0);
    for (std::size_t s = 0; s < dom.marked.size(); ++s) {
        InterfaceTrace tr = trace_interface(M, bits, static_cast<int>(s));
        for (int e : tr.edges) seen[M.edge_dense.at(e)] = 1;
    }
    std::vector<double> out;
    for (int e0 = 0; e0 < E; ++e0) {
        if (seen[e0]) continue;
        double wind = 0.0;
        int cur = e0;
        int prev_face = M.edge_face1[e0];
        cplx tcur = dom.edge_cross_dir(M.edge_ids[cur]);
        for (int guard = 0; guard <= E; ++guard) {
            seen[cur] = 1;
            int face = M.edge_face0[cur] != prev_face ? M.edge_face0[cur] : M.edge_face1[cur];
            int side = M.side_of_edge(face, cur);
            int out_side = M.partner(face, side, bits);
            int nxt = M.locals[face].eidx[out_side];
            wind += turn_angle(tcur, M.locals[face].tdir[out_side]);
            tcur = M.locals[face].tdir[out_side];
            prev_face = face;
            cur = nxt;
            if (cur == e0) break;
        }
        out.push_back(wind);
    }
    return out;
}

struct ObservableTable {
    const DiscreteDomain* dom = nullptr;
    std::unordered_map<int, cplx> edge_values;  // graph edge id -> F
    FaceField face_values;
    double extension_residual = 0.0;  // worst projection defect of the extension
    double Z = 0.0;
    double wind_ab = 0.0;  // deterministic total turning a -> b
    std::uint64_t config_count = 0;
    std::string model;
    cplx normalization;  // F(b)
};

/// Exact FK fermion by enumeration over all 2^n connection configurations.
inline ObservableTable enumerate_fk(const DiscreteDomain& dom, int cap = 26) {
    if (dom.kind != DomainKind::Fk) fail(ErrorKind::BadInput, "enumerate_fk: need a Dobrushin domain");
    const int n = dom.n_inner;
    if (n > cap || n >= 63) fail(ErrorKind::TooLarge, "enumerate_fk: too many inner rhombi");
    LoopMachine M(dom);
    const double delta = dom.delta();
    const double sqrt2 = std::sqrt(2.0);

    ObservableTable tab;
    tab.dom = &dom;
    tab.model = "fk";
    std::unordered_map<int, cplx> acc;
    for (int e : dom.domain_edges()) acc[e] = cplx(0, 0);

    std::vector<int> uf;
    double Z = 0.0;
    double wind_ab = 0.0;
    bool have_wind = false;
    const std::uint64_t total = 1ULL << n;
    std::uint64_t bits = 0;
    for (std::uint64_t g = 0;; ++g) {
        double w = M.config_weight(bits);
        int comps = M.components(bits, uf);
        int loops = comps - 1;
        if (loops < 0) fail(ErrorKind::TraceError, "enumerate_fk: malformed strand structure");
        w *= std::pow(sqrt2, loops);
        InterfaceTrace tr = trace_interface(M, bits, 0);
        if (tr.end_marked != 1)
            fail(ErrorKind::TraceError, "enumerate_fk: interface does not join the marked points");
        if (!have_wind) {
            wind_ab = tr.total_wind;
            have_wind = true;
        } else if (std::abs(tr.total_wind - wind_ab) > 1e-9) {
            fail(ErrorKind::TraceError, "enumerate_fk: boundary winding not configuration-free");
        }
        Z += w;
        for (std::size_t k = 0; k < tr.edges.size(); ++k) {
            double wb = tr.wind_at[k] - wind_ab;  // wind(b -> xi)
            acc[tr.edges[k]] += w * std::exp(cplx(0, -0.5 * wb));
        }
        if (g + 1 == total) break;
        std::uint64_t g2 = g + 1;
        bits = g2 ^ (g2 >> 1);
    }

    tab.Z = Z;
    tab.wind_ab = wind_ab;
    tab.config_count = total;
    const double norm = 1.0 / std::sqrt(2.0 * delta);
    for (auto& [e, v] : acc) tab.edge_values[e] = norm * v / Z;

    tab.face_values = FaceField(&dom);
    for (std::size_t f = 0; f < dom.faces.size(); ++f) {
        auto [val, res] = face_value_from_edges(dom, static_cast<int>(f), tab.edge_values);
        tab.face_values.set(static_cast<int>(f), val);
        tab.extension_residual = std::max(tab.extension_residual, res);
    }
    tab.normalization = tab.edge_values.at(dom.marked[1].edge);
    return tab;
}

struct CrossingExact {
    double Z = 0.0;
    double P = 0.0;   // P(a<->b and c<->d interfaces)
    double Q = 0.0;
    double kappa = 0.0;
    std::uint64_t config_count = 0;
};

inline double kappa_from_p(double p) {
    if (p < 0.0 || p > 1.0) fail(ErrorKind::OutOfRange, "kappa_from_p: p outside [0,1]");
    if (p == 1.0) return 1.0;
    double t = p / (1.0 - p);
    double s = t * t + std::sqrt(2.0) * t;
    double r = s / (s + 1.0);
    return r * r;
}

/// Exact crossing probability of a quad by enumeration.
inline CrossingExact crossing_exact(const DiscreteDomain& dom, int cap = 26) {
    if (dom.kind != DomainKind::Quad) fail(ErrorKind::BadInput, "crossing_exact: need a quad");
    const int n = dom.n_inner;
    if (n > cap || n >= 63) fail(ErrorKind::TooLarge, "crossing_exact: too many inner rhombi");
    LoopMachine M(dom);
    const double sqrt2 = std::sqrt(2.0);
    double Z = 0.0, Pw = 0.0;
    std::vector<int> uf;
    const std::uint64_t total = 1ULL << n;
    std::uint64_t bits = 0;
    for (std::uint64_t g = 0;; ++g) {
        double w = M.config_weight(bits);
        int comps = M.components(bits, uf);
        int loops = comps - 2;
        if (loops < 0) fail(ErrorKind::TraceError, "crossing_exact: malformed strands");
        w *= std::pow(sqrt2, loops);
        InterfaceTrace tr = trace_interface(M, bits, 0);
        if (tr.end_marked != 1 && tr.end_marked != 3)
            fail(ErrorKind::TraceError, "crossing_exact: interface from a must end at b or d");
        Z += w;
        if (tr.end_marked == 1) Pw += w;
        if (g + 1 == total) break;
        std::uint64_t g2 = g + 1;
        bits = g2 ^ (g2 >> 1);
    }
    CrossingExact out;
    out.Z = Z;
    out.P = Pw / Z;
    out.Q = 1.0 - out.P;
    out.kappa = kappa_from_p(out.P);
    out.config_count = total;
    return out;
}

// ----------------------------------------------------------------------------
// Spin-Ising enumeration.
//
// Spins live on inner white vertices; the low-temperature contour of a
// configuration draws the black diagonal of every inner rhombus whose white
// diagonal separates opposite spins, plus the half-diagonals of the two
// marked boundary half-rhombi.  The interface is traced from a with the
// left-most rule; windings accumulate the turning at black vertices.

enum class SpinTieRule { LeftMost, RightMost, CoinToss };

/// Iteratively removes rhombi whose black diagonal ends in a degree-one
/// vertex; such rhombi can never be drawn and the white-boundary condition
/// requires their absence.
inline std::vector<int> prune_spin_region(const IsoradialGraph& g, std::vector<int> region) {
    bool changed = true;
    while (changed) {
        changed = false;
        std::unordered_map<int, int> deg;
        for (int z : region) {
            const Rhombus& r = g.rh(z);
            deg[r.u1] += 1;
            deg[r.u2] += 1;
        }
        std::vector<int> keep;
        keep.reserve(region.size());
        for (int z : region) {
            const Rhombus& r = g.rh(z);
            if (deg[r.u1] <= 1 || deg[r.u2] <= 1) {
                changed = true;
                continue;
            }
            keep.push_back(z);
        }
        region.swap(keep);
        if (region.empty()) fail(ErrorKind::BadInput, "prune_spin_region: nothing left");
    }
    return region;
}

/// Inner faces whose removal disconnects the black-diagonal graph (bridges).
/// A valid spin domain has none.
inline std::vector<int> spin_domain_bridges(const DiscreteDomain& dom) {
    const IsoradialGraph& g = dom.graph;
    std::unordered_map<int, int> vid;
    std::vector<std::vector<std::pair<int, int>>> adj;  // vertex -> (nbr, face)
    auto idx = [&](int v) {
        auto [it, fresh] = vid.try_emplace(v, static_cast<int>(adj.size()));
        if (fresh) adj.emplace_back();
        return it->second;
    };
    for (int fi = 0; fi < dom.n_inner; ++fi) {
        const Rhombus& r = g.rh(dom.faces[fi].rhombus);
        int a = idx(r.u1), b = idx(r.u2);
        adj[a].push_back({b, fi});
        adj[b].push_back({a, fi});
    }
    const int n = static_cast<int>(adj.size());
    std::vector<int> tin(n, -1), low(n, 0);
    std::vector<int> bridges;
    int timer = 0;
    // iterative dfs
    struct Frame {
        int v, pe;
        std::size_t i;
    };
    for (int root = 0; root < n; ++root) {
        if (tin[root] != -1) continue;
        std::vector<Frame> st{{root, -1, 0}};
        tin[root] = low[root] = timer++;
        while (!st.empty()) {
            Frame& f = st.back();
            if (f.i < adj[f.v].size()) {
                auto [to, fe] = adj[f.v][f.i++];
                if (fe == f.pe) continue;
                if (tin[to] != -1) {
                    low[f.v] = std::min(low[f.v], tin[to]);
                } else {
                    tin[to] = low[to] = timer++;
                    st.push_back({to, fe, 0});
                }
            } else {
                int v = f.v, pe = f.pe;
                st.pop_back();
                if (!st.empty()) {
                    int p = st.back().v;
                    low[p] = std::min(low[p], low[v]);
                    if (low[v] > tin[p]) bridges.push_back(pe);
                }
            }
        }
    }
    std::sort(bridges.begin(), bridges.end());
    return bridges;
}

struct SpinMachine {
    const DiscreteDomain* dom = nullptr;
    std::vector<int> inner_whites;             // spin-carrying vertices
    std::unordered_map<int, int> white_index;  // vertex -> spin bit
    std::vector<std::pair<int, int>> face_whites;  // per inner face: white diag ends
    std::vector<double> face_x;                    // tan(theta/2) per inner face
    std::unordered_map<int, int> boundary_sign;    // boundary white -> +-1
    // segments at black vertices: inner faces by diagonal corner
    std::unordered_map<int, std::vector<int>> segs_at;

    explicit SpinMachine(const DiscreteDomain& d) : dom(&d) {
        if (d.kind != DomainKind::Spin) fail(ErrorKind::BadInput, "SpinMachine: need a spin domain");
        const IsoradialGraph& g = d.graph;
        // boundary signs: -1 on the arc from a to b in walk order, +1 on the rest
        const Arc& arc = d.arcs[0];
        const int m = static_cast<int>(arc.faces.size());
        int pa = -1, pb = -1;
        for (int k = 0; k < m; ++k) {
            if (arc.faces[k] == d.spin_a) pa = k;
            if (arc.faces[k] == d.spin_b) pb = k;
        }
        if (pa < 0 || pb < 0) fail(ErrorKind::BadMarkedPoint, "SpinMachine: marked faces not on arc");
        for (int k = 0; k < m; ++k) {
            bool minus = (pa <= pb) ? (k >= pa && k < pb) : (k >= pa || k < pb);
            const Face& f = d.faces[arc.faces[k]];
            boundary_sign[f.d2] = minus ? -1 : +1;  // sign flips across a and across b
        }

        for (int fi = 0; fi < d.n_inner; ++fi) {
            const Rhombus& r = g.rh(d.faces[fi].rhombus);
            face_whites.push_back({r.w1, r.w2});
            face_x.push_back(std::tan(r.theta / 2));
            segs_at[r.u1].push_back(fi);
            segs_at[r.u2].push_back(fi);
            for (int w : {r.w1, r.w2})
                if (!boundary_sign.count(w) && !white_index.count(w)) {
                    white_index.emplace(w, static_cast<int>(inner_whites.size()));
                    inner_whites.push_back(w);
                }
        }
    }

    int sign_of(int w, std::uint64_t spins) const {
        auto it = boundary_sign.find(w);
        if (it != boundary_sign.end()) return it->second;
        return ((spins >> white_index.at(w)) & 1) ? -1 : +1;
    }

    std::uint64_t drawn_set(std::uint64_t spins) const {
        std::uint64_t s = 0;
        for (std::size_t fi = 0; fi < face_whites.size(); ++fi)
            if (sign_of(face_whites[fi].first, spins) != sign_of(face_whites[fi].second, spins))
                s |= 1ULL << fi;
        return s;
    }

    double drawn_weight(std::uint64_t drawn) const {
        double w = 1.0;
        for (std::size_t fi = 0; fi < face_whites.size(); ++fi)
            if ((drawn >> fi) & 1) w *= face_x[fi];
        return w;
    }

    cplx apex_pos(int face) const { return dom->graph.pos(dom->faces[face].apex); }
    cplx zeta_pos(int face) const { return dom->faces[face].center; }
    int apex(int face) const { return dom->faces[face].apex; }
    double theta_of_face(int face) const { return dom->graph.rh(dom->faces[face].rhombus).theta; }
};

struct SpinTraceResult {
    double wind = 0.0;  // total turning from the start direction at a
    bool ok = false;    // reached the requested target
    int first_step = -1;  // inner face taken first (or -1 when ending at once)
};

/// Traces the interface of a drawn set from the marked half-rhombus a.  The
/// target is either a boundary half-rhombus (target_face, target_corner = -1)
/// or an inner rhombus entered through target_corner.  Tie rule: at a black
/// vertex, candidates are scanned from the reversed incoming direction; the
/// left-most route takes the largest counterclockwise turn.
inline SpinTraceResult spin_trace(const SpinMachine& M, std::uint64_t drawn, int target_face,
                                  int target_corner, SpinTieRule rule = SpinTieRule::LeftMost,
                                  SplitMix64* rng = nullptr) {
    const DiscreteDomain& dom = *M.dom;
    const IsoradialGraph& g = dom.graph;
    SpinTraceResult out;

    std::uint64_t used = 0;
    int a = dom.spin_a;
    cplx pos_cur = M.zeta_pos(a);
    int v = M.apex(a);
    cplx dir = g.pos(v) - pos_cur;
    dir /= std::abs(dir);
    double wind = 0.0;

    const int max_steps = static_cast<int>(M.face_whites.size()) + 4;
    for (int step = 0; step <= max_steps; ++step) {
        // candidates at black vertex v
        struct Cand {
            double turn;
            int face;    // inner face, or -1 for terminal halves
            int which;   // 0 inner, 1 = target half, 2 = back-to-a half
            cplx ndir;
            int nv;
        };
        std::vector<Cand> cands;
        auto it = M.segs_at.find(v);
        if (it != M.segs_at.end())
            for (int fi : it->second) {
                if ((drawn >> fi) & 1) {
                    if ((used >> fi) & 1) continue;
                    const Rhombus& r = g.rh(dom.faces[fi].rhombus);
                    int nv = r.u1 == v ? r.u2 : r.u1;
                    cplx nd = g.pos(nv) - g.pos(v);
                    nd /= std::abs(nd);
                    double t = turn_angle(dir, nd);
                    cands.push_back({t, fi, 0, nd, nv});
                }
            }
        if (target_corner != -1 && v == target_corner) {
            const Face& tf = dom.faces[target_face];
            cplx nd = tf.center - g.pos(v);
            nd /= std::abs(nd);
            cands.push_back({turn_angle(dir, nd), target_face, 1, nd, -1});
        }
        if (target_corner == -1 && target_face >= 0 && v == M.apex(target_face)) {
            cplx nd = M.zeta_pos(target_face) - g.pos(v);
            nd /= std::abs(nd);
            cands.push_back({turn_angle(dir, nd), target_face, 1, nd, -1});
        }
        if (cands.empty()) return out;  // dead end: picture invalid for this target

        const Cand* pick = &cands[0];
        if (rule == SpinTieRule::CoinToss && rng != nullptr) {
            pick = &cands[rng->below(static_cast<std::uint32_t>(cands.size()))];
        } else {
            for (const Cand& c : cands) {
                bool better = rule == SpinTieRule::LeftMost ? c.turn > pick->turn
                                                            : c.turn < pick->turn;
                if (better) pick = &c;
            }
        }
        wind += pick->turn;
        dir = pick->ndir;
        if (pick->which != 0) {
            out.ok = true;
            out.wind = wind;
            return out;
        }
        if (out.first_step == -1) out.first_step = pick->face;
        used |= 1ULL << pick->face;
        v = pick->nv;
    }
    fail(ErrorKind::TraceError, "spin_trace: runaway trace");
}

/// Partition function of the spin model with Dobrushin boundary conditions,
/// including the [sin(theta_b/2)]^{-1} prefactor.
struct SpinZ {
    double Z = 0.0;            // full convention
    double inner_sum = 0.0;    // sum over configs of the inner drawn weight
    double wind_ab = 0.0;      // deterministic winding of the a -> b interface
    std::uint64_t config_count = 0;
};

inline SpinZ spin_partition(const DiscreteDomain& dom, int cap = 24,
                            SpinTieRule rule = SpinTieRule::LeftMost) {
    SpinMachine M(dom);
    const int W = static_cast<int>(M.inner_whites.size());
    if (W > cap || W >= 63 || dom.n_inner >= 63)
        fail(ErrorKind::TooLarge, "spin_partition: too many spins");
    SpinZ out;
    bool have_wind = false;
    for (std::uint64_t s = 0; s < (1ULL << W); ++s) {
        std::uint64_t drawn = M.drawn_set(s);
        double w = M.drawn_weight(drawn);
        out.inner_sum += w;
        SpinTraceResult tr = spin_trace(M, drawn, dom.spin_b, -1, rule);
        if (!tr.ok) fail(ErrorKind::TraceError, "spin_partition: interface lost");
        if (!have_wind) {
            out.wind_ab = tr.wind;
            have_wind = true;
        } else if (std::abs(tr.wind - out.wind_ab) > 1e-9) {
            fail(ErrorKind::TraceError, "spin_partition: winding not configuration-free");
        }
    }
    double tha = M.theta_of_face(dom.spin_a), thb = M.theta_of_face(dom.spin_b);
    out.Z = std::tan(tha / 2) / std::cos(thb / 2) * out.inner_sum;
    out.config_count = 1ULL << W;
    return out;
}

/// Independent route to the partition function: enumerate edge pictures
/// (subsets of inner rhombi) with the parity of a single a -> b interface.
inline double spin_partition_pictures(const DiscreteDomain& dom, int cap = 24) {
    SpinMachine M(dom);
    const int n = dom.n_inner;
    if (n > cap + 6 || n >= 30)
        fail(ErrorKind::TooLarge, "spin_partition_pictures: too many inner rhombi");
    const IsoradialGraph& g = dom.graph;
    int ua = M.apex(dom.spin_a), ub = M.apex(dom.spin_b);
    double sum = 0.0;
    for (std::uint64_t s = 0; s < (1ULL << n); ++s) {
        std::unordered_map<int, int> deg;
        double w = 1.0;
        for (int fi = 0; fi < n; ++fi)
            if ((s >> fi) & 1) {
                const Rhombus& r = g.rh(dom.faces[fi].rhombus);
                deg[r.u1] ^= 1;
                deg[r.u2] ^= 1;
                w *= M.face_x[fi];
            }
        deg[ua] ^= 1;
        deg[ub] ^= 1;
        bool even = true;
        for (auto& [v, d] : deg) even &= (d == 0);
        if (even) sum += w;
    }
    double tha = M.theta_of_face(dom.spin_a), thb = M.theta_of_face(dom.spin_b);
    return std::tan(tha / 2) / std::cos(thb / 2) * sum;
}

/// Per-face unnormalized picture sums sum_omega w(omega) e^{-i/2 wind}:
/// every subset of inner rhombi whose odd-degree set is {apex(a), u}
/// contributes one a -> target picture for each half-rhombus entered
/// through u.
struct SpinPictureSums {
    std::vector<cplx> face_num;  // indexed by domain face
    double wind_ab = 0.0;
    std::uint64_t config_count = 0;
};

inline SpinPictureSums spin_enumerate_core(const SpinMachine& M, int cap,
                                           SpinTieRule rule = SpinTieRule::LeftMost) {
    const DiscreteDomain& dom = *M.dom;
    const int n = dom.n_inner;
    if (n > cap || n >= 63) fail(ErrorKind::TooLarge, "spin enumeration: too many inner rhombi");
    const IsoradialGraph& g = dom.graph;

    // dense black-vertex indexing for O(1) parity updates
    std::unordered_map<int, int> bidx;
    std::vector<int> bverts;
    auto dense = [&](int v) {
        auto [it, fresh] = bidx.try_emplace(v, static_cast<int>(bverts.size()));
        if (fresh) bverts.push_back(v);
        return it->second;
    };
    std::vector<std::pair<int, int>> ends(n);
    for (int fi = 0; fi < n; ++fi) {
        const Rhombus& r = g.rh(dom.faces[fi].rhombus);
        ends[fi] = {dense(r.u1), dense(r.u2)};
    }
    const int apex_a = dense(M.apex(dom.spin_a));

    struct Target {
        int face;
        int corner;  // graph vertex id for inner faces, -1 for boundary
        cplx acc{0, 0};
    };
    std::vector<std::vector<int>> targets_at(bverts.size());
    std::vector<Target> targets;
    auto add_target = [&](int face, int corner_vertex) {
        auto it = bidx.find(corner_vertex);
        if (it == bidx.end()) return;  // vertex touches no inner rhombus: unreachable
        targets.push_back({face, dom.is_inner_face(face) ? corner_vertex : -1, cplx(0, 0)});
        targets_at[it->second].push_back(static_cast<int>(targets.size()) - 1);
    };
    for (int fi = 0; fi < static_cast<int>(dom.faces.size()); ++fi) {
        if (fi == dom.spin_a) continue;
        if (dom.is_inner_face(fi)) {
            const Rhombus& r = g.rh(dom.faces[fi].rhombus);
            add_target(fi, r.u1);
            add_target(fi, r.u2);
        } else {
            add_target(fi, M.apex(fi));
        }
    }

    std::vector<std::uint8_t> parity(bverts.size(), 0);
    int odd_count = 0;
    long long odd_sum = 0;
    double w = 1.0;
    std::uint64_t bits = 0;
    bool have_wind = false;
    double wind_ab = 0.0;
    auto toggle = [&](int bv) {
        if (parity[bv]) {
            parity[bv] = 0;
            --odd_count;
            odd_sum -= bv;
        } else {
            parity[bv] = 1;
            ++odd_count;
            odd_sum += bv;
        }
    };
    auto visit = [&]() {
        int entry;
        if (odd_count == 0) {
            entry = apex_a;
        } else if (odd_count == 2 && parity[apex_a]) {
            entry = static_cast<int>(odd_sum - apex_a);
        } else {
            return;
        }
        for (int ti : targets_at[entry]) {
            Target& t = targets[ti];
            if (dom.is_inner_face(t.face) && ((bits >> t.face) & 1))
                continue;  // the target rhombus itself may not be drawn
            SpinTraceResult tr = spin_trace(M, bits, t.face, t.corner, rule);
            if (!tr.ok) fail(ErrorKind::TraceError, "spin enumeration: interface lost");
            t.acc += w * std::exp(cplx(0, -0.5 * tr.wind));
            if (t.face == dom.spin_b && !have_wind) {
                wind_ab = tr.wind;
                have_wind = true;
            }
        }
    };

    const std::uint64_t total = 1ULL << n;
    for (std::uint64_t gcount = 0;; ++gcount) {
        visit();
        if (gcount + 1 == total) break;
        std::uint64_t nxt = (gcount + 1) ^ ((gcount + 1) >> 1);
        std::uint64_t flip = bits ^ nxt;
        int fi = std::countr_zero(flip);
        bits = nxt;
        toggle(ends[fi].first);
        toggle(ends[fi].second);
        if ((bits >> fi) & 1)
            w *= M.face_x[fi];
        else
            w /= M.face_x[fi];
    }

    SpinPictureSums out;
    out.face_num.assign(dom.faces.size(), cplx(0, 0));
    for (const Target& t : targets) out.face_num[t.face] += t.acc;
    out.wind_ab = wind_ab;
    out.config_count = total;
    return out;
}

/// Exact spin fermion by enumeration; F(b) is pinned to the supplied
/// normalizer value (parallel to tau(b)^{-1/2}).
inline ObservableTable spin_fermion(const DiscreteDomain& dom, cplx F_b, int cap = 26,
                                    SpinTieRule rule = SpinTieRule::LeftMost) {
    SpinMachine M(dom);
    auto sums = spin_enumerate_core(M, cap, rule);

    ObservableTable tab;
    tab.dom = &dom;
    tab.model = "spin";
    tab.config_count = sums.config_count;
    tab.normalization = F_b;
    tab.wind_ab = sums.wind_ab;
    tab.face_values = FaceField(&dom);

    cplx num_b = sums.face_num[dom.spin_b];
    if (std::abs(num_b) == 0.0) fail(ErrorKind::TraceError, "spin_fermion: no a->b pictures");
    const double thb = M.theta_of_face(dom.spin_b);
    tab.Z = std::tan(M.theta_of_face(dom.spin_a) / 2) / std::cos(thb / 2) * std::abs(num_b);

    for (std::size_t f = 0; f < dom.faces.size(); ++f) {
        int fi = static_cast<int>(f);
        if (fi == dom.spin_a) continue;
        if (fi == dom.spin_b) {
            tab.face_values.set(fi, F_b);
            continue;
        }
        double thz = M.theta_of_face(fi);
        tab.face_values.set(fi, F_b * (std::cos(thb / 2) / std::cos(thz / 2)) *
                                    sums.face_num[fi] / num_b);
    }
    // F(a): the unique s-holomorphic extension across the two edges of the
    // marked half-rhombus; its i tau^{-1/2} direction is a consequence, not
    // an input.
    {
        std::unordered_map<int, cplx> evals;
        for (const FaceSide& s : dom.sides[dom.spin_a]) {
            auto ff = dom.edge_faces(s.edge);
            int nbr = ff[0] == dom.spin_a ? ff[1] : ff[0];
            if (nbr == -1) continue;
            evals[s.edge] = project(tab.face_values.at(nbr), dom.edge_nu(s.edge));
        }
        auto [fa, res] = face_value_from_edges(dom, dom.spin_a, evals);
        tab.face_values.set(dom.spin_a, fa);
    }
    return tab;
}

/// Expectation data for one target (the public enumerate_spin operation).
struct SpinTarget {
    double Z = 0.0;   // partition function of the domain
    cplx expectation;  // Z_{a->z} E[exp(-i/2 wind(a->z))], full weight conventions
};

inline SpinTarget enumerate_spin(const DiscreteDomain& dom, int target_face, int /*unused*/ = -1,
                                 int cap = 26) {
    SpinMachine M(dom);
    auto sums = spin_enumerate_core(M, cap);
    SpinTarget out;
    double tha = M.theta_of_face(dom.spin_a);
    double thb = M.theta_of_face(dom.spin_b);
    double thz = M.theta_of_face(target_face);
    out.Z = std::tan(tha / 2) / std::cos(thb / 2) * std::abs(sums.face_num[dom.spin_b]);
    out.expectation = std::tan(tha / 2) / std::cos(thz / 2) * sums.face_num[target_face];
    return out;
}

// ----------------------------------------------------------------------------
// Martingale checks: one-step decomposition over the first interface step.

/// FK: F_Omega(xi) = sum_steps P(step) F_{Omega \ step}(xi) on shared edges.
inline double martingale_check_fk(const IsoradialGraph& g, const std::vector<int>& region,
                                  int a_edge, int b_edge, int cap = 24) {
    auto dom = carve_dobrushin(g, region, a_edge, b_edge);
    auto parent = enumerate_fk(dom, cap);

    LoopMachine M(dom);
    int za = dom.faces[dom.marked[0].inner_face].rhombus;
    std::vector<int> child_region;
    for (int z : region)
        if (z != za) child_region.push_back(z);
    std::unordered_set<int> child_set(child_region.begin(), child_region.end());

    // The first interface step runs through the face at a and any forced
    // boundary half-rhombi until it crosses an edge of the reduced region;
    // that edge is the marked point of the slit domain.
    auto step_edge_of = [&](const InterfaceTrace& tr) {
        for (std::size_t k = 1; k < tr.edges.size(); ++k) {
            const LatticeEdge& le = g.edges[tr.edges[k]];
            if ((le.face0 != -1 && child_set.count(le.face0)) ||
                (le.face1 != -1 && child_set.count(le.face1)))
                return tr.edges[k];
        }
        fail(ErrorKind::TraceError, "martingale_check_fk: first step never meets the region");
    };

    std::unordered_map<int, double> step_weight;  // slit marked edge -> weight
    std::vector<int> uf;
    const int n = dom.n_inner;
    const double sqrt2 = std::sqrt(2.0);
    std::uint64_t bits = 0;
    for (std::uint64_t gg = 0;; ++gg) {
        double w = M.config_weight(bits) * std::pow(sqrt2, M.components(bits, uf) - 1);
        InterfaceTrace tr = trace_interface(M, bits, 0);
        step_weight[step_edge_of(tr)] += w;
        if (gg + 1 == (1ULL << n)) break;
        std::uint64_t g2 = gg + 1;
        bits = g2 ^ (g2 >> 1);
    }

    std::unordered_map<int, cplx> combo;
    double violation = 0.0;
    std::unordered_map<int, int> edge_hits;
    for (auto& [exit_edge, w] : step_weight) {
        auto child = carve_dobrushin(g, child_region, exit_edge, b_edge);
        auto ctab = enumerate_fk(child, cap);
        double p = w / parent.Z;
        for (auto& [e, v] : ctab.edge_values) {
            combo[e] += p * v;
            edge_hits[e] += 1;
        }
    }
    int nsteps = static_cast<int>(step_weight.size());
    for (auto& [e, v] : combo) {
        if (edge_hits[e] != nsteps) continue;  // only edges shared by all children
        auto it = parent.edge_values.find(e);
        if (it == parent.edge_values.end()) continue;
        violation = std::max(violation, std::abs(it->second - v));
    }
    return violation;
}

/// Spin: same decomposition over the first drawn rhombus out of a.
inline double martingale_check_spin(const IsoradialGraph& g, const std::vector<int>& region,
                                    int a_rhombus, int b_rhombus, cplx F_b, int cap = 20) {
    auto dom = carve_spin(g, region, a_rhombus, b_rhombus);
    auto parent = spin_fermion(dom, F_b, cap);
    SpinMachine M(dom);
    const int W = static_cast<int>(M.inner_whites.size());

    std::unordered_map<int, double> step_weight;  // first inner face -> weight
    for (std::uint64_t s = 0; s < (1ULL << W); ++s) {
        std::uint64_t drawn = M.drawn_set(s);
        double w = M.drawn_weight(drawn);
        SpinTraceResult tr = spin_trace(M, drawn, dom.spin_b, -1);
        if (!tr.ok) fail(ErrorKind::TraceError, "martingale_check_spin: interface lost");
        if (tr.first_step == -1)
            fail(ErrorKind::TraceError, "martingale_check_spin: immediate arrival unsupported");
        step_weight[dom.faces[tr.first_step].rhombus] += w;
    }
    double total = 0.0;
    for (auto& [z, w] : step_weight) total += w;

    std::unordered_map<int, cplx> combo;  // graph rhombus -> combined F
    std::unordered_map<int, int> hits;
    const int apex_a = dom.faces[dom.spin_a].apex;
    const int apex_b = dom.faces[dom.spin_b].apex;
    for (auto& [z1, w] : step_weight) {
        std::vector<int> child_region;
        for (int z : region)
            if (z != z1) child_region.push_back(z);
        // the interface continues from the far corner of the crossed rhombus
        const Rhombus& r1 = g.rh(z1);
        int far = r1.u1 == apex_a ? r1.u2 : r1.u1;
        auto child = carve_spin(g, child_region, z1, b_rhombus, far, apex_b);
        auto ctab = spin_fermion(child, F_b, cap);
        double p = w / total;
        for (int fi = 0; fi < child.n_inner; ++fi) {
            combo[child.faces[fi].rhombus] += p * ctab.face_values.at(fi);
            hits[child.faces[fi].rhombus] += 1;
        }
    }
    int nsteps = static_cast<int>(step_weight.size());
    double violation = 0.0;
    for (int fi = 0; fi < dom.n_inner; ++fi) {
        int z = dom.faces[fi].rhombus;
        auto it = combo.find(z);
        if (it == combo.end() || hits[z] != nsteps) continue;
        violation = std::max(violation, std::abs(parent.face_values.at(fi) - it->second));
    }
    return violation;
}

}  // namespace isoising

#endif
