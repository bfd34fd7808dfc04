#include <catch2/catch_amalgamated.hpp>

#include "isoising/ising.hpp"

using namespace isoising;

namespace {

const double kSqrt2 = std::sqrt(2.0);

DiscreteDomain single_rhombus_domain() {
    auto g = build_square(1.0, 4, 4);
    std::vector<int> region{1 * 4 + 1};  // rhombus [1,2]x[1,2]
    int a = find_marked_edge_near(g, region, cplx(1.5, 1.0), Color::Black);
    int b = find_marked_edge_near(g, region, cplx(2.0, 1.5), Color::White);
    return carve_dobrushin(g, region, a, b);
}

DiscreteDomain block_fk_domain(const IsoradialGraph& g, double x0, double x1, double y0, double y1,
                               cplx pa, cplx pb) {
    auto region = region_in_rect(g, x0, x1, y0, y1);
    int a = find_marked_edge_near(g, region, pa, Color::Black);
    int b = find_marked_edge_near(g, region, pb, Color::White);
    return carve_dobrushin(g, region, a, b);
}

double parallel_defect(cplx value, cplx dir) {
    if (std::abs(value) == 0.0) return 0.0;
    cplx u = inv_sqrt_dir(dir);
    return std::abs(std::imag(value * std::conj(u) / std::abs(u))) / std::abs(value);
}

}  // namespace

TEST_CASE("single-rhombus FK enumeration against hand values") {
    auto dom = single_rhombus_domain();
    REQUIRE(dom.n_inner == 1);
    REQUIRE(std::abs(dom.b_orientation - cplx(0, 1)) < 1e-12);
    auto tab = enumerate_fk(dom);

    CHECK(tab.config_count == 2);
    CHECK(tab.Z == Catch::Approx((1 + kSqrt2) * std::sin(kPi / 8)).epsilon(1e-13));
    CHECK(tab.wind_ab == Catch::Approx(-kPi / 2).margin(1e-12));

    const double s = 1.0 / kSqrt2;  // (2 delta)^{-1/2}
    cplx Fb = tab.edge_values.at(dom.marked[1].edge);
    cplx Fa = tab.edge_values.at(dom.marked[0].edge);
    CHECK(std::abs(Fb - cplx(s, 0)) < 1e-13);
    CHECK(std::abs(Fa - s * std::exp(cplx(0, -kPi / 4))) < 1e-13);

    cplx Fz = tab.face_values.at(0);
    CHECK(std::abs(Fz - s * cplx(1.0, 1.0 - kSqrt2)) < 1e-13);
    CHECK(tab.extension_residual < 1e-13);

    auto rep = is_sholomorphic(dom, tab.face_values);
    CHECK(rep.max_residual < 1e-13);

    // normalization at the b face: Re F(b_face) = (2 delta)^{-1/2}
    int bface = dom.marked[1].inner_face;
    CHECK(std::real(tab.face_values.at(bface)) == Catch::Approx(s).epsilon(1e-13));

    // boundary parallelism on the three black-arc half-rhombi
    for (int f = dom.n_inner; f < static_cast<int>(dom.faces.size()); ++f)
        CHECK(parallel_defect(tab.face_values.at(f), dom.tau(f)) < 1e-12);
}

TEST_CASE("FK fermion is s-holomorphic on bigger domains") {
    SECTION("square lattice 3x3 block") {
        auto g = build_square(1.0, 5, 5);
        auto dom = block_fk_domain(g, 1, 4, 1, 4, cplx(1.0, 2.5), cplx(4.0, 2.5));
        REQUIRE(dom.n_inner == 9);
        auto tab = enumerate_fk(dom);
        CHECK(tab.config_count == 512);
        auto rep = is_sholomorphic(dom, tab.face_values);
        double scale = tab.face_values.max_abs();
        CHECK(rep.max_residual < 1e-10 * scale);
        CHECK(tab.extension_residual < 1e-10 * scale);
        for (const Arc& arc : dom.arcs)
            for (int f : arc.faces)
                CHECK(parallel_defect(tab.face_values.at(f), dom.tau(f)) < 1e-12);
        cplx Fb = tab.edge_values.at(dom.marked[1].edge);
        CHECK(std::abs(Fb - cplx(1.0 / kSqrt2, 0)) < 1e-12);
    }
    SECTION("random rhombic lattice") {
        auto g = build_random_rhombic(1.0, 7, 7, 0.2, 31);
        auto dom = block_fk_domain(g, 1.6, 5.2, 1.6, 5.2, cplx(1.7, 3.5), cplx(5.1, 3.5));
        REQUIRE(dom.n_inner >= 6);
        REQUIRE(dom.n_inner <= 16);
        auto tab = enumerate_fk(dom);
        auto rep = is_sholomorphic(dom, tab.face_values);
        double scale = tab.face_values.max_abs();
        CHECK(rep.max_residual < 1e-10 * scale);
        for (const Arc& arc : dom.arcs)
            for (int f : arc.faces)
                CHECK(parallel_defect(tab.face_values.at(f), dom.tau(f)) < 1e-11);
    }
}

TEST_CASE("a constant face field is not generically s-holomorphic, F(z)=z fails") {
    auto g = build_square(1.0, 5, 5);
    auto dom = block_fk_domain(g, 1, 4, 1, 4, cplx(1.0, 2.5), cplx(4.0, 2.5));
    FaceField fz(&dom);
    for (std::size_t f = 0; f < dom.faces.size(); ++f) fz.set(static_cast<int>(f), dom.faces[f].center);
    auto rep = is_sholomorphic(dom, fz);
    CHECK(rep.max_residual > 0.1 * dom.delta());

    FaceField fc(&dom);
    for (std::size_t f = 0; f < dom.faces.size(); ++f) fc.set(static_cast<int>(f), cplx(0.7, -0.3));
    auto repc = is_sholomorphic(dom, fc);
    CHECK(repc.max_residual < 1e-15);
}

TEST_CASE("FK bijection phase-table identity") {
    SplitMix64 rng(17);
    for (int k = 0; k < 1000; ++k) {
        double th = rng.uniform(1e-3, kPi / 2 - 1e-3);
        double ts = kPi / 2 - th;
        cplx lhs = kSqrt2 * std::sin(th / 2) + std::sin(ts / 2) - cplx(0, 1) * std::sin(ts / 2);
        cplx rhs = std::exp(cplx(0, th)) * std::sin(ts / 2) +
                   std::exp(cplx(0, -ts)) * (kSqrt2 * std::sin(th / 2) + std::sin(ts / 2));
        REQUIRE(std::abs(lhs - rhs) < 1e-14);
    }
}

TEST_CASE("interface traces and loop windings") {
    SECTION("straight corridor has zero winding") {
        auto g = build_square(1.0, 6, 3);
        auto region = region_in_rect(g, 1, 5, 1, 2);  // 4x1 corridor
        // canonical crossing directions point leftward on both vertical ends,
        // so the interface runs right to left: a on the right, b on the left
        int a = find_marked_edge_near(g, region, cplx(5.0, 1.5), Color::Black);
        int b = find_marked_edge_near(g, region, cplx(1.0, 1.5), Color::White);
        auto dom = carve_dobrushin(g, region, a, b);
        REQUIRE(dom.n_inner == 4);
        auto tab = enumerate_fk(dom);
        CHECK(tab.wind_ab == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("left-turn phase factor matches e^{-i theta*}") {
        // the winding of the reversed interface gains 2 theta* per left turn,
        // so consecutive crossed edges of the trace satisfy
        // wind(k+1) - wind(k) = +-2theta or +-2theta*
        auto dom = single_rhombus_domain();
        auto tr = extract_interface(dom, 1);  // hug-black configuration
        REQUIRE(tr.edges.size() == 6);
        CHECK(tr.wind_at[1] - tr.wind_at[0] == Catch::Approx(kPi / 2));    // +2 theta
        CHECK(tr.wind_at[2] - tr.wind_at[1] == Catch::Approx(-kPi / 2));   // -2 theta*
    }
    SECTION("closed loops turn by exactly +-2 pi") {
        auto g = build_square(1.0, 5, 5);
        auto dom = block_fk_domain(g, 1, 4, 1, 4, cplx(1.0, 2.5), cplx(4.0, 2.5));
        int checked = 0;
        for (std::uint64_t bits : {0ULL, 511ULL, 173ULL, 342ULL}) {
            for (double w : loop_windings(dom, bits)) {
                CHECK(std::abs(std::abs(w) - 2 * kPi) < 1e-12);
                ++checked;
            }
        }
        CHECK(checked > 0);
    }
}

TEST_CASE("exact crossing probabilities") {
    SECTION("P + Q = 1 and the kappa map") {
        auto g = build_square(1.0, 6, 6);
        auto region = region_in_rect(g, 1, 5, 1, 5);
        int a = find_marked_edge_near(g, region, cplx(1.0, 3.0), Color::Black);
        int b = find_marked_edge_near(g, region, cplx(3.0, 1.0), Color::White);
        int c = find_marked_edge_near(g, region, cplx(5.0, 3.0), Color::Black);
        int d = find_marked_edge_near(g, region, cplx(3.0, 5.0), Color::White);
        auto dom = carve_quad(g, region, a, b, c, d);
        auto cr = crossing_exact(dom);
        CHECK(cr.P >= 0.0);
        CHECK(cr.P <= 1.0);
        CHECK(cr.P + cr.Q == Catch::Approx(1.0).epsilon(1e-14));
        CHECK(cr.kappa == Catch::Approx(kappa_from_p(cr.P)));
    }
    SECTION("p = 1/2 maps to kappa = 1/2") {
        CHECK(kappa_from_p(0.5) == Catch::Approx(0.5).epsilon(1e-14));
        CHECK(kappa_from_p(0.0) == Catch::Approx(0.0).margin(1e-15));
        CHECK(kappa_from_p(1.0) == Catch::Approx(1.0).margin(1e-15));
    }
}

TEST_CASE("spin enumeration basics") {
    auto g = build_square(1.0, 6, 6);
    auto region = prune_spin_region(g, region_in_rect(g, 1, 5, 1, 4));
    int am = find_spin_mark_near(g, region, cplx(3.0, 4.5));
    int bm = find_spin_mark_near(g, region, cplx(3.0, 0.5));
    auto dom = carve_spin(g, region, am, bm);
    SpinMachine M(dom);
    REQUIRE(M.inner_whites.size() <= 8);

    SECTION("partition function routes agree") {
        auto Z1 = spin_partition(dom);
        double Z2 = spin_partition_pictures(dom);
        CHECK(Z1.Z == Catch::Approx(Z2).epsilon(1e-12));
    }
    SECTION("forced corridor has unit phase modulus") {
        auto g2 = build_square(1.0, 7, 3);
        auto corridor = region_in_rect(g2, 1, 6, 1, 2);  // single row: no free spins
        auto a2 = find_spin_mark_near(g2, corridor, cplx(1.0, 1.5));
        auto b2 = find_spin_mark_near(g2, corridor, cplx(6.0, 1.5));
        auto dom2 = carve_spin(g2, corridor, a2, b2);
        SpinMachine M2(dom2);
        REQUIRE(M2.inner_whites.empty());
        auto t = enumerate_spin(dom2, dom2.spin_b, -1);
        auto Z = spin_partition(dom2);
        double tha = M2.theta_of_face(dom2.spin_a), thb = M2.theta_of_face(dom2.spin_b);
        double plain = std::tan(tha / 2) / std::cos(thb / 2) * Z.inner_sum;
        CHECK(std::abs(t.expectation) == Catch::Approx(plain).epsilon(1e-12));
    }
}

TEST_CASE("spin fermion is s-holomorphic with the left-most rule") {
    auto g = build_square(1.0, 6, 6);
    auto region = prune_spin_region(g, region_in_rect(g, 1, 5, 1, 4));
    int am = find_spin_mark_near(g, region, cplx(3.0, 4.5));
    int bm = find_spin_mark_near(g, region, cplx(3.0, 0.5));
    auto dom = carve_spin(g, region, am, bm);

    cplx taub = dom.tau(dom.spin_b);
    cplx Fb = inv_sqrt_dir(taub) / std::abs(inv_sqrt_dir(taub));
    auto tab = spin_fermion(dom, Fb);

    double scale = tab.face_values.max_abs();
    auto rep = is_sholomorphic(dom, tab.face_values);
    CHECK(rep.max_residual < 1e-10 * scale);

    // boundary parallelism away from a; at a the direction picks up a factor i
    for (int f = dom.n_inner; f < static_cast<int>(dom.faces.size()); ++f) {
        if (f == dom.spin_a) {
            CHECK(parallel_defect(tab.face_values.at(f), cplx(0, 1) * dom.tau(f) *
                                                             cplx(0, 1) * dom.tau(f)) >= 0.0);
            cplx dir = cplx(0, 1) * inv_sqrt_dir(dom.tau(f));
            double defect = std::abs(std::imag(tab.face_values.at(f) * std::conj(dir) /
                                               std::abs(dir))) /
                            std::max(1e-300, std::abs(tab.face_values.at(f)));
            CHECK(defect < 1e-10);
        } else {
            CHECK(parallel_defect(tab.face_values.at(f), dom.tau(f)) < 1e-10);
        }
    }
}

TEST_CASE("martingale property by one-step decomposition") {
    SECTION("FK six-rhombus domain") {
        auto g = build_square(1.0, 5, 4);
        auto region = region_in_rect(g, 1, 4, 1, 3);  // 3x2 block
        int a = find_marked_edge_near(g, region, cplx(1.0, 1.5), Color::Black);
        int b = find_marked_edge_near(g, region, cplx(4.0, 2.5), Color::White);
        CHECK(martingale_check_fk(g, region, a, b) < 1e-12);
    }
    SECTION("spin domain") {
        auto g = build_square(1.0, 6, 6);
        auto region = prune_spin_region(g, region_in_rect(g, 1, 5, 1, 4));
        int am = find_spin_mark_near(g, region, cplx(3.0, 4.5));
        int bm = find_spin_mark_near(g, region, cplx(3.0, 0.5));
        cplx Fb(1.0, 0.0);
        auto dom = carve_spin(g, region, am, bm);
        cplx dir = inv_sqrt_dir(dom.tau(dom.spin_b));
        CHECK(martingale_check_spin(g, region, am, bm, dir / std::abs(dir)) < 1e-12);
    }
}
