#include <catch2/catch_amalgamated.hpp>

#include "isoising/mc.hpp"

using namespace isoising;

TEST_CASE("critical weights") {
    CHECK(critical_weight(kPi / 4) ==
          Catch::Approx(std::sqrt(2.0) / (1.0 + std::sqrt(2.0))).epsilon(1e-14));
    CHECK(critical_weight(kPi / 4) == Catch::Approx(0.58579).margin(1e-5));
    CHECK(critical_weight(1e-9) < 1e-8);
    CHECK(critical_weight(kPi / 2 - 1e-9) > 1.0 - 1e-8);
    double prev = 0.0;
    for (int k = 1; k < 40; ++k) {
        double p = critical_weight(k * kPi / 80);
        CHECK(p > prev);
        prev = p;
    }
    auto g = build_random_rhombic(1.0, 4, 4, 0.2, 9);
    auto w = critical_weights(g);
    for (const Rhombus& r : g.rhombi) {
        CHECK(w.at(r.id) > 0.0);
        CHECK(w.at(r.id) < 1.0);
        CHECK(w.at(r.id) == Catch::Approx(critical_weight(r.theta)));
    }
}

TEST_CASE("weight translation reproduces the loop-measure crossing exactly") {
    SECTION("square lattice quad") {
        auto dom = make_selfdual_quad(1);
        auto loops = crossing_exact(dom);
        double wired_loop = std::sqrt(2.0) * loops.P / (std::sqrt(2.0) * loops.P + loops.Q);
        double wired_rc = rc_crossing_exact_wired(dom);
        REQUIRE(std::abs(wired_loop - wired_rc) < 1e-10);
        // and the inverse transform returns the bare loop probability
        REQUIRE(std::abs(loop_p_from_wired(wired_rc) - loops.P) < 1e-10);
    }
    SECTION("rectangular quad") {
        auto dom = make_rect_quad(4, 3);
        auto loops = crossing_exact(dom);
        double wired_loop = std::sqrt(2.0) * loops.P / (std::sqrt(2.0) * loops.P + loops.Q);
        CHECK(std::abs(wired_loop - rc_crossing_exact_wired(dom)) < 1e-10);
    }
    SECTION("random rhombic quad") {
        auto g = build_random_rhombic(1.0, 8, 8, 0.18, 5);
        auto region = region_in_rect(g, 2.2, 6.0, 2.2, 5.2);
        int a = find_marked_edge_near(g, region, cplx(2.2, 2.2), Color::Black);
        int b = find_marked_edge_near(g, region, cplx(6.0, 2.2), Color::White);
        int c = find_marked_edge_near(g, region, cplx(6.0, 5.2), Color::Black);
        int d = find_marked_edge_near(g, region, cplx(2.2, 5.2), Color::White);
        auto dom = carve_quad(g, region, a, b, c, d);
        REQUIRE(dom.n_inner <= 14);
        auto loops = crossing_exact(dom);
        double wired_loop = std::sqrt(2.0) * loops.P / (std::sqrt(2.0) * loops.P + loops.Q);
        CHECK(std::abs(wired_loop - rc_crossing_exact_wired(dom)) < 1e-10);
    }
}

TEST_CASE("self-dual symmetric quad crosses with probability one half") {
    auto dom = make_selfdual_quad(1);
    REQUIRE(dom.n_inner == 9);
    auto cr = crossing_exact(dom);
    CHECK(cr.P == Catch::Approx(0.5).epsilon(1e-12));
    CHECK(cr.kappa == Catch::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("markov chain agrees with exact enumeration") {
    auto dom = make_selfdual_quad(1);
    auto exact = crossing_exact(dom);
    auto rep = mcmc_crossing(dom, 200000, 20240901);
    CHECK(rep.sigma > 0);
    CHECK(std::abs(rep.P_hat - exact.P) < 3 * rep.sigma);

    auto dom2 = make_rect_quad(4, 2);
    auto exact2 = crossing_exact(dom2);
    auto rep2 = mcmc_crossing(dom2, 200000, 77);
    CHECK(std::abs(rep2.P_hat - exact2.P) < 3 * rep2.sigma);
}

TEST_CASE("seed determinism") {
    auto dom = make_rect_quad(3, 2);
    auto r1 = mcmc_crossing(dom, 20000, 123);
    auto r2 = mcmc_crossing(dom, 20000, 123);
    CHECK(r1.P_hat == r2.P_hat);
    CHECK(r1.sigma == r2.sigma);
    CHECK(r1.P_wired == r2.P_wired);
    auto r3 = mcmc_crossing(dom, 20000, 124);
    CHECK(r1.P_hat != r3.P_hat);
}

TEST_CASE("chain visits bond configurations with the exact stationary law") {
    // two-bond toy: track the joint bond state over a long run
    auto g = build_square(1.0, 6, 5);
    auto region = region_in_rect(g, 1, 3, 1, 2);  // two rhombi side by side
    int a = find_marked_edge_near(g, region, cplx(1.0, 1.5), Color::Black);
    int b = find_marked_edge_near(g, region, cplx(1.5, 1.0), Color::White);
    int c = find_marked_edge_near(g, region, cplx(3.0, 1.5), Color::Black);
    int d = find_marked_edge_near(g, region, cplx(2.5, 2.0), Color::White);
    auto dom = carve_quad(g, region, a, b, c, d);
    REQUIRE(dom.n_inner == 2);

    // exact stationary bond law of the wired-together measure
    ClusterState st(dom);
    const int S = st.site_count();
    detail::UnionFind uf;
    double Z = 0.0;
    double pw[4] = {0, 0, 0, 0};
    for (int mask = 0; mask < 4; ++mask) {
        double w = 1.0;
        uf.reset(S + 1);
        for (int e = 0; e < 2; ++e) {
            if ((mask >> e) & 1) {
                w *= st.p_open[e];
                uf.unite(st.bonds[e][0], st.bonds[e][1]);
            } else {
                w *= 1 - st.p_open[e];
            }
        }
        uf.unite(st.arc_site_a, S);
        uf.unite(st.arc_site_b, S);
        int comps = 0;
        for (int s = 0; s <= S; ++s)
            if (uf.find(s) == s) ++comps;
        w *= std::pow(2.0, comps);
        pw[mask] = w;
        Z += w;
    }
    for (double& w : pw) w /= Z;

    // empirical law from the chain
    SplitMix64 rng(555);
    ClusterState chain(dom);
    const long long steps = 1000000;
    long long counts[4] = {0, 0, 0, 0};
    for (long long t = 0; t < steps; ++t) {
        for (int e = 0; e < 2; ++e) {
            auto [sa, sb] = chain.bonds[e];
            chain.open_bond[e] =
                (chain.spin[sa] == chain.spin[sb]) && rng.uniform() < chain.p_open[e];
        }
        uf.reset(S);
        for (int e = 0; e < 2; ++e)
            if (chain.open_bond[e]) uf.unite(chain.bonds[e][0], chain.bonds[e][1]);
        int ra = uf.find(chain.arc_site_a), rb = uf.find(chain.arc_site_b);
        std::vector<std::int8_t> root_spin(S, 0);
        for (int s = 0; s < S; ++s) {
            int r = uf.find(s);
            if (root_spin[r] == 0)
                root_spin[r] = (r == ra || r == rb) ? 1 : (rng.bernoulli(0.5) ? 1 : -1);
            chain.spin[s] = root_spin[r];
        }
        if (t >= steps / 10) ++counts[chain.open_bond[0] | (chain.open_bond[1] << 1)];
    }
    long long total = 0;
    for (long long cnum : counts) total += cnum;
    for (int mask = 0; mask < 4; ++mask) {
        double freq = static_cast<double>(counts[mask]) / total;
        double sigma = std::sqrt(pw[mask] * (1 - pw[mask]) / total);
        // batch-free bound padded for autocorrelation
        CHECK(std::abs(freq - pw[mask]) < 3 * 3 * sigma + 1e-6);
    }
}

TEST_CASE("error bars shrink like the square root of the sweep count") {
    auto dom = make_rect_quad(4, 2);
    auto r1 = mcmc_crossing(dom, 40000, 99);
    auto r2 = mcmc_crossing(dom, 160000, 99);
    CHECK(r2.sigma < r1.sigma);
    CHECK(r2.sigma > 0.25 * r1.sigma);
    CHECK(r2.sigma < 0.85 * r1.sigma);
}
