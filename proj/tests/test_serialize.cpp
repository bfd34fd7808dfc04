#include <catch2/catch_amalgamated.hpp>

#include "isoising/csv.hpp"
#include "isoising/serialize.hpp"
#include "isoising/svg.hpp"

using namespace isoising;

TEST_CASE("graph JSON round-trip is faithful") {
    auto g = build_random_rhombic(0.73, 5, 4, 0.2, 42);
    auto j = graph_to_json(g);
    auto g2 = graph_from_json(j);
    REQUIRE(g2.vertices.size() == g.vertices.size());
    REQUIRE(g2.rhombi.size() == g.rhombi.size());
    for (std::size_t v = 0; v < g.vertices.size(); ++v) {
        CHECK(g2.vertices[v].id == g.vertices[v].id);
        CHECK(g2.vertices[v].color == g.vertices[v].color);
        CHECK(g2.vertices[v].pos == g.vertices[v].pos);  // bit-exact round-trip
    }
    for (std::size_t r = 0; r < g.rhombi.size(); ++r) {
        CHECK(g2.rhombi[r].u1 == g.rhombi[r].u1);
        CHECK(g2.rhombi[r].w2 == g.rhombi[r].w2);
        CHECK(g2.rhombi[r].theta == g.rhombi[r].theta);
    }
    REQUIRE_NOTHROW(validate(g2));
}

TEST_CASE("domain JSON round-trip preserves the enumeration bit for bit") {
    auto g = build_square(1.0, 5, 4);
    auto region = region_in_rect(g, 1, 4, 1, 3);
    int a = find_marked_edge_near(g, region, cplx(1.0, 1.5), Color::Black);
    int b = find_marked_edge_near(g, region, cplx(4.0, 2.5), Color::White);
    auto dom = carve_dobrushin(g, region, a, b);
    auto j = domain_to_json(dom);
    auto dom2 = domain_from_json(j);

    REQUIRE(dom2.faces.size() == dom.faces.size());
    REQUIRE(dom2.n_inner == dom.n_inner);
    REQUIRE(dom2.arcs.size() == dom.arcs.size());
    for (std::size_t f = 0; f < dom.faces.size(); ++f) {
        CHECK(dom2.faces[f].rhombus == dom.faces[f].rhombus);
        CHECK(dom2.faces[f].kind == dom.faces[f].kind);
        CHECK(dom2.faces[f].d1 == dom.faces[f].d1);
    }
    auto t1 = enumerate_fk(dom);
    auto t2 = enumerate_fk(dom2);
    CHECK(t1.Z == t2.Z);  // determinism: identical inputs, identical outputs
    for (const auto& [e, v] : t1.edge_values) CHECK(t2.edge_values.at(e) == v);
}

TEST_CASE("spin domain round-trip") {
    auto g = build_square(1.0, 6, 6);
    auto region = prune_spin_region(g, region_in_rect(g, 1, 5, 1, 4));
    int am = find_spin_mark_near(g, region, cplx(3.0, 4.5));
    int bm = find_spin_mark_near(g, region, cplx(3.0, 0.5));
    auto dom = carve_spin(g, region, am, bm);
    auto dom2 = domain_from_json(domain_to_json(dom));
    CHECK(dom2.spin_a == dom.spin_a);
    CHECK(dom2.spin_b == dom.spin_b);
    auto Z1 = spin_partition(dom);
    auto Z2 = spin_partition(dom2);
    CHECK(Z1.Z == Z2.Z);
}

TEST_CASE("observable JSON carries normalization metadata") {
    auto g = build_square(1.0, 4, 4);
    std::vector<int> region{1 * 4 + 1};
    int a = find_marked_edge_near(g, region, cplx(1.5, 1.0), Color::Black);
    int b = find_marked_edge_near(g, region, cplx(2.0, 1.5), Color::White);
    auto dom = carve_dobrushin(g, region, a, b);
    auto tab = enumerate_fk(dom);
    auto j = observable_to_json(tab);
    CHECK(j.at("model") == "fk");
    CHECK(j.at("edges").size() == tab.edge_values.size());
    CHECK(j.at("faces").size() == tab.face_values.size());
    CHECK(j.at("normalization")[0].get<double>() == std::real(tab.normalization));
}

TEST_CASE("CSV output is deterministic with 17 significant digits") {
    CsvTable t({"check", "value"});
    t.add_row({std::string("pi"), kPi});
    t.add_row({std::string("count"), static_cast<long long>(42)});
    std::string s1 = t.to_string();
    std::string s2 = t.to_string();
    CHECK(s1 == s2);
    CHECK(s1.find("3.1415926535897931") != std::string::npos);
}

TEST_CASE("SVG emitters are byte-deterministic and reject empty input") {
    auto g = build_square(1.0, 4, 4);
    std::vector<int> region{1 * 4 + 1};
    int a = find_marked_edge_near(g, region, cplx(1.5, 1.0), Color::Black);
    int b = find_marked_edge_near(g, region, cplx(2.0, 1.5), Color::White);
    auto dom = carve_dobrushin(g, region, a, b);
    std::vector<double> vals(dom.faces.size(), 0.3);
    auto s1 = svg_face_heatmap(dom, vals, 0, 1);
    auto s2 = svg_face_heatmap(dom, vals, 0, 1);
    CHECK(s1 == s2);
    CHECK(s1.rfind("<svg", 0) == 0);

    PlotSeries ps;
    ps.label = "series";
    ps.points = {{0, 0}, {1, 1}, {2, 0.5}};
    auto p1 = svg_line_plot({ps});
    CHECK(p1 == svg_line_plot({ps}));
    CHECK_THROWS_AS(svg_line_plot({}), Error);
    PlotSeries empty;
    CHECK_THROWS_AS(svg_line_plot({empty}), Error);
}
