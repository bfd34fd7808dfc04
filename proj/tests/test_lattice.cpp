#include <catch2/catch_amalgamated.hpp>

#include "isoising/dca.hpp"
#include "isoising/lattice.hpp"

using namespace isoising;

TEST_CASE("square lattice construction") {
    auto g = build_square(1.0, 2, 2);
    REQUIRE(g.rhombi.size() == 4);
    for (const Rhombus& r : g.rhombi) CHECK(r.theta == Catch::Approx(kPi / 4));
    REQUIRE_NOTHROW(validate(g));

    auto g1 = build_square(0.5, 1, 1);
    REQUIRE(g1.rhombi.size() == 1);
    const Rhombus& r = g1.rhombi[0];
    CHECK(std::abs(g1.pos(r.w1) - g1.pos(r.u1)) == Catch::Approx(0.5));

    auto g8 = build_square(1.0, 8, 8);
    CHECK(g8.eta == Catch::Approx(kPi / 2));
    REQUIRE_NOTHROW(validate(g8));
}

TEST_CASE("rhombic lattice from train tracks") {
    auto g = build_rhombic(1.0, {0.0, 0.0, 0.0}, {kPi / 2, kPi / 2}, kPi / 2);
    REQUIRE(g.rhombi.size() == 6);
    for (const Rhombus& r : g.rhombi) CHECK(r.theta == Catch::Approx(kPi / 4));

    auto g2 = build_rhombic(1.0, {0.0, 0.3, -0.2}, {kPi / 2, kPi / 2 + 0.25}, 0.3);
    REQUIRE(g2.rhombi.size() == 6);
    REQUIRE_NOTHROW(validate(g2));
    for (const Rhombus& r : g2.rhombi) {
        CHECK(2 * r.theta >= 0.3);
        CHECK(kPi - 2 * r.theta >= 0.3);
    }

    CHECK_THROWS_AS(build_rhombic(1.0, {0.0}, {0.1}, 0.3), Error);
}

TEST_CASE("validate rejects a perturbed vertex") {
    auto g = build_square(1.0, 4, 4);
    g.vertices[7].pos += cplx(0.1, 0.03);  // delta/10 displacement
    CHECK_THROWS_AS(validate(g), Error);
}

TEST_CASE("mu equals the area of the neighbor polygon") {
    auto g = build_rhombic(1.0, {0.0, 0.25, -0.15, 0.1}, {kPi / 2, kPi / 2 - 0.2, kPi / 2 + 0.15},
                           0.5);
    int checked = 0;
    for (const Vertex& v : g.vertices) {
        if (!g.fans[v.id].closed) continue;
        CHECK(g.mu(v.id) == Catch::Approx(fan_polygon_area(g, v.id)).epsilon(1e-12));
        ++checked;
    }
    REQUIRE(checked > 0);
}

TEST_CASE("closed fans are counterclockwise and consistent") {
    auto g = build_square(1.0, 4, 4);
    int closed = 0;
    for (const Vertex& v : g.vertices)
        if (g.fans[v.id].closed) {
            ++closed;
            CHECK(g.fans[v.id].entries.size() == 4);
        }
    CHECK(closed == 9);  // interior vertices of a 4x4 rhombus grid
}
