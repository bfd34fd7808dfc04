#ifndef ISOISING_MC_HPP
#define ISOISING_MC_HPP

#include "isoising/ising.hpp"

namespace isoising {

/// Critical random-cluster edge probability for a rhombus of half-angle
/// theta: the odds ratio p/(1-p) = sqrt(2) sin(theta/2)/sin(theta*/2) is the
/// unique choice matching the loop representation on a one-rhombus wired
/// domain; on the square lattice p = sqrt(2)/(1+sqrt(2)).
inline double critical_weight(double theta) {
    double s = std::sin(theta / 2), sd = std::sin((kPi / 2 - theta) / 2);
    double num = std::sqrt(2.0) * s;
    return num / (num + sd);
}

inline RhombusField<double> critical_weights(const IsoradialGraph& g) {
    RhombusField<double> w(&g);
    for (const Rhombus& r : g.rhombi) w.set(r.id, critical_weight(r.theta));
    return w;
}

/// Loop-measure crossing probability from the wired-together chain estimate:
/// the external wiring adds one loop whenever a and b connect, so
/// P_loop = P' / (P' + sqrt(2) (1 - P')).
inline double loop_p_from_wired(double p_wired) {
    return p_wired / (p_wired + std::sqrt(2.0) * (1.0 - p_wired));
}

inline double loop_p_derivative(double p_wired) {
    double d = p_wired + std::sqrt(2.0) * (1.0 - p_wired);
    return std::sqrt(2.0) / (d * d);
}

/// Bond/site scaffold of the random-cluster model on a quad: sites are the
/// black vertices with each wired arc pre-merged; bonds are the inner rhombi.
struct ClusterState {
    const DiscreteDomain* dom = nullptr;
    std::vector<int> sites;                  // dense site ids
    std::unordered_map<int, int> site_of;    // black vertex -> site
    int arc_site_a = -1, arc_site_b = -1;    // the two wired arcs
    std::vector<std::array<int, 2>> bonds;   // per inner face: site pair
    std::vector<double> p_open;              // per inner face
    std::vector<std::uint8_t> open_bond;     // current bond configuration
    std::vector<std::int8_t> spin;           // per site, +-1

    explicit ClusterState(const DiscreteDomain& d) : dom(&d) {
        if (d.kind != DomainKind::Quad)
            fail(ErrorKind::NotAlternatingQuad, "ClusterState: need a quad domain");
        // wired arcs share one site each; arcs 1 and 3 are the black arcs
        std::unordered_map<int, int> token;
        for (int v : d.arcs[1].polyline) token[v] = -1;
        for (int v : d.arcs[3].polyline) token[v] = -2;
        arc_site_a = 0;
        arc_site_b = 1;
        sites = {-1, -2};
        auto site = [&](int v) {
            auto t = token.find(v);
            if (t != token.end()) return t->second == -1 ? arc_site_a : arc_site_b;
            auto [it, fresh] = site_of.try_emplace(v, static_cast<int>(sites.size()));
            if (fresh) sites.push_back(v);
            return it->second;
        };
        for (int fi = 0; fi < d.n_inner; ++fi) {
            const Rhombus& r = d.graph.rh(d.faces[fi].rhombus);
            bonds.push_back({site(r.u1), site(r.u2)});
            p_open.push_back(critical_weight(r.theta));
        }
        open_bond.assign(bonds.size(), 0);
        spin.assign(sites.size(), 1);
    }

    int site_count() const { return static_cast<int>(sites.size()); }
};

namespace detail {

class UnionFind {
  public:
    void reset(int n) {
        parent_.resize(n);
        for (int i = 0; i < n; ++i) parent_[i] = i;
    }
    int find(int x) {
        while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[a] = b;
    }

  private:
    std::vector<int> parent_;
};

}  // namespace detail

struct CrossingReport {
    double P_hat = 0.0;       // loop-measure crossing estimate
    double sigma = 0.0;       // batched standard error of P_hat
    double P_wired = 0.0;     // raw estimate in the wired-together chain
    double sigma_wired = 0.0;
    long long sweeps = 0;
    long long samples = 0;
    double eff_samples = 0.0;  // autocorrelation-adjusted
    double kappa_hat = 0.0;
    double u = -1.0;           // conformal modulus when supplied by the caller
    double p_formula = -1.0;   // continuum value at that modulus
    std::uint64_t seed = 0;
    std::string rng_name;
};

/// Swendsen-Wang chain for the q=2 random-cluster measure with the two wired
/// arcs joined (Dobrushin wiring through an external connection); the report
/// converts back to the bare loop-measure crossing probability.
inline CrossingReport mcmc_crossing(const DiscreteDomain& dom, long long sweeps,
                                    std::uint64_t seed, long long burn_in = -1) {
    ClusterState st(dom);
    SplitMix64 rng(seed);
    if (burn_in < 0) burn_in = std::max<long long>(64, sweeps / 10);
    if (sweeps <= burn_in)
        fail(ErrorKind::InsufficientSamples, "mcmc_crossing: sweeps below burn-in");

    detail::UnionFind uf;
    const int S = st.site_count();
    const int B = static_cast<int>(st.bonds.size());
    std::vector<double> batch_means;
    const long long n_meas = sweeps - burn_in;
    const int n_batches = 64;
    const long long batch_len = std::max<long long>(1, n_meas / n_batches);
    double batch_acc = 0.0;
    long long batch_cnt = 0, total_hits = 0, total_cnt = 0;

    for (long long sweep = 0; sweep < sweeps; ++sweep) {
        // bond refresh given spins
        for (int e = 0; e < B; ++e) {
            auto [sa, sb] = st.bonds[e];
            st.open_bond[e] =
                (st.spin[sa] == st.spin[sb]) && rng.uniform() < st.p_open[e] ? 1 : 0;
        }
        // clusters
        uf.reset(S);
        for (int e = 0; e < B; ++e)
            if (st.open_bond[e]) uf.unite(st.bonds[e][0], st.bonds[e][1]);
        // spin refresh: components holding a wired arc stay +1
        int ra = uf.find(st.arc_site_a), rb = uf.find(st.arc_site_b);
        std::vector<std::int8_t> root_spin(S, 0);
        for (int s = 0; s < S; ++s) {
            int r = uf.find(s);
            if (root_spin[r] == 0)
                root_spin[r] = (r == ra || r == rb) ? 1 : (rng.bernoulli(0.5) ? 1 : -1);
            st.spin[s] = root_spin[r];
        }
        if (sweep >= burn_in) {
            double hit = (ra == rb) ? 1.0 : 0.0;
            total_hits += (ra == rb);
            ++total_cnt;
            batch_acc += hit;
            if (++batch_cnt == batch_len) {
                batch_means.push_back(batch_acc / batch_cnt);
                batch_acc = 0.0;
                batch_cnt = 0;
            }
        }
    }

    CrossingReport rep;
    rep.sweeps = sweeps;
    rep.samples = total_cnt;
    rep.seed = seed;
    rep.rng_name = SplitMix64::kName;
    rep.P_wired = static_cast<double>(total_hits) / total_cnt;
    double mean = rep.P_wired;
    double var_b = 0.0;
    for (double m : batch_means) var_b += (m - mean) * (m - mean);
    var_b /= std::max<std::size_t>(1, batch_means.size() * (batch_means.size() - 1));
    rep.sigma_wired = std::sqrt(var_b);
    double var_naive = mean * (1 - mean) / total_cnt;
    rep.eff_samples = var_b > 0 ? var_naive / var_b * total_cnt : static_cast<double>(total_cnt);
    rep.P_hat = loop_p_from_wired(rep.P_wired);
    rep.sigma = loop_p_derivative(rep.P_wired) * rep.sigma_wired;
    rep.kappa_hat = kappa_from_p(std::min(1.0, std::max(0.0, rep.P_hat)));
    return rep;
}

/// Exact crossing probability of the wired-together random-cluster measure by
/// bond enumeration (calibration oracle for the weight translation).
inline double rc_crossing_exact_wired(const DiscreteDomain& dom, int cap = 24) {
    ClusterState st(dom);
    const int B = static_cast<int>(st.bonds.size());
    if (B > cap) fail(ErrorKind::TooLarge, "rc_crossing_exact_wired: too many bonds");
    const int S = st.site_count();
    detail::UnionFind uf;
    double Z = 0.0, Pw = 0.0;
    for (std::uint64_t mask = 0; mask < (1ULL << B); ++mask) {
        double w = 1.0;
        uf.reset(S + 1);  // extra ghost joins the two arcs
        for (int e = 0; e < B; ++e) {
            if ((mask >> e) & 1) {
                w *= st.p_open[e];
                uf.unite(st.bonds[e][0], st.bonds[e][1]);
            } else {
                w *= 1.0 - st.p_open[e];
            }
        }
        bool crossing = uf.find(st.arc_site_a) == uf.find(st.arc_site_b);
        uf.unite(st.arc_site_a, S);
        uf.unite(st.arc_site_b, S);
        int comps = 0;
        for (int s = 0; s <= S; ++s)
            if (uf.find(s) == s) ++comps;
        w *= std::pow(2.0, comps);
        Z += w;
        if (crossing) Pw += w;
    }
    return Pw / Z;
}

/// Square-lattice quadrilateral with a 90-degree rotational symmetry that
/// swaps the two sublattices and the two arc colors, forcing the exact
/// crossing probability 1/2: a (2m+1) x (2m+1) block with marked edges in а
/// rotation orbit around the central rhombus.
inline DiscreteDomain make_selfdual_quad(int m, int margin = 2) {
    const int side = 2 * m + 1;
    const int cells = side + 2 * margin;
    auto g = build_square(1.0, cells, cells);
    double lo = margin, hi = margin + side;
    auto region = region_in_rect(g, lo, hi, lo, hi);
    cplx center((lo + hi) / 2, (lo + hi) / 2);

    // position lookup for exact rotation images
    std::unordered_map<long long, int> at;
    auto key = [&](cplx p) {
        return (std::llround(std::real(p) * 4) << 24) ^ std::llround(std::imag(p) * 4);
    };
    for (const Vertex& v : g.vertices) at[key(v.pos)] = v.id;
    auto rot = [&](cplx p) { return center + cplx(0, 1) * (p - center); };

    int e0 = find_marked_edge_near(g, region, cplx(lo, (lo + hi) / 2), Color::Black);
    std::vector<int> marks{e0};
    for (int k = 0; k < 3; ++k) {
        const LatticeEdge& le = g.edges[marks.back()];
        int va = at.at(key(rot(g.pos(le.a))));
        int vb = at.at(key(rot(g.pos(le.b))));
        marks.push_back(g.edge_between(va, vb));
    }
    return carve_marked(g, region, marks);
}

/// Axis-aligned W x H block with marked edges at the four corners: arcs are
/// the four sides, wired on the left and right, so the crossing runs
/// horizontally and the conformal modulus is near W/H.
inline DiscreteDomain make_rect_quad(int W, int H, int margin = 2) {
    auto g = build_square(1.0, W + 2 * margin, H + 2 * margin);
    double x0 = margin, x1 = margin + W, y0 = margin, y1 = margin + H;
    auto region = region_in_rect(g, x0, x1, y0, y1);
    int a = find_marked_edge_near(g, region, cplx(x0, y0), Color::Black);
    int b = find_marked_edge_near(g, region, cplx(x1, y0), Color::White);
    int c = find_marked_edge_near(g, region, cplx(x1, y1), Color::Black);
    int d = find_marked_edge_near(g, region, cplx(x0, y1), Color::White);
    return carve_quad(g, region, a, b, c, d);
}

}  // namespace isoising

#endif
