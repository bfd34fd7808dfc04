#ifndef ISOISING_SERIALIZE_HPP
#define ISOISING_SERIALIZE_HPP

#include <fstream>

#include <json.hpp>

#include "isoising/fields.hpp"
#include "isoising/ising.hpp"

namespace isoising {

using json = nlohmann::json;

inline json graph_to_json(const IsoradialGraph& g) {
    json j;
    j["delta"] = g.delta;
    j["eta"] = g.eta;
    json vs = json::array();
    for (const Vertex& v : g.vertices)
        vs.push_back({{"id", v.id},
                      {"color", v.color == Color::Black ? "black" : "white"},
                      {"x", std::real(v.pos)},
                      {"y", std::imag(v.pos)}});
    j["vertices"] = std::move(vs);
    json rs = json::array();
    for (const Rhombus& r : g.rhombi)
        rs.push_back({{"id", r.id},
                      {"u1", r.u1},
                      {"w1", r.w1},
                      {"u2", r.u2},
                      {"w2", r.w2},
                      {"theta", r.theta}});
    j["rhombi"] = std::move(rs);
    return j;
}

inline IsoradialGraph graph_from_json(const json& j) {
    IsoradialGraph g;
    g.delta = j.at("delta").get<double>();
    g.eta = j.at("eta").get<double>();
    for (const auto& v : j.at("vertices")) {
        Vertex vx;
        vx.id = v.at("id").get<int>();
        vx.color = v.at("color").get<std::string>() == "black" ? Color::Black : Color::White;
        vx.pos = cplx(v.at("x").get<double>(), v.at("y").get<double>());
        if (static_cast<int>(g.vertices.size()) <= vx.id) g.vertices.resize(vx.id + 1);
        g.vertices[vx.id] = vx;
    }
    for (const auto& r : j.at("rhombi")) {
        Rhombus rh;
        rh.id = r.at("id").get<int>();
        rh.u1 = r.at("u1").get<int>();
        rh.w1 = r.at("w1").get<int>();
        rh.u2 = r.at("u2").get<int>();
        rh.w2 = r.at("w2").get<int>();
        rh.theta = r.at("theta").get<double>();
        rh.center = (g.vertices[rh.u1].pos + g.vertices[rh.u2].pos) / 2.0;
        if (static_cast<int>(g.rhombi.size()) <= rh.id) g.rhombi.resize(rh.id + 1);
        g.rhombi[rh.id] = rh;
    }
    g.finalize();
    return g;
}

inline json domain_to_json(const DiscreteDomain& dom) {
    json j = graph_to_json(dom.graph);
    json d;
    d["kind"] = dom.kind == DomainKind::Fk ? "fk" : (dom.kind == DomainKind::Quad ? "quad" : "spin");
    json inner = json::array();
    for (int f = 0; f < dom.n_inner; ++f) inner.push_back(dom.faces[f].rhombus);
    d["inner"] = std::move(inner);
    json bd = json::array();
    for (std::size_t f = dom.n_inner; f < dom.faces.size(); ++f) {
        const Face& face = dom.faces[f];
        bd.push_back({{"rhombus", face.rhombus},
                      {"cut", face.kind == FaceKind::WhiteTri ? "white" : "black"},
                      {"apex", face.apex},
                      {"d1", face.d1},
                      {"d2", face.d2},
                      {"arc", face.arc}});
    }
    d["boundary"] = std::move(bd);
    json arcs = json::array();
    for (const Arc& arc : dom.arcs)
        arcs.push_back({{"color", arc.poly_color == Color::White ? "white" : "black"},
                        {"polyline", arc.polyline},
                        {"tau_along_walk", arc.tau_along_walk}});
    d["arcs"] = std::move(arcs);
    json marked = json::array();
    for (const MarkedEdge& m : dom.marked)
        marked.push_back({{"vb", m.vb}, {"vw", m.vw}});
    d["marked"] = std::move(marked);
    if (dom.kind == DomainKind::Spin) {
        d["spin_a"] = dom.spin_a;
        d["spin_b"] = dom.spin_b;
    }
    j["domain"] = std::move(d);
    return j;
}

inline DiscreteDomain domain_from_json(const json& j) {
    DiscreteDomain dom;
    dom.graph = graph_from_json(j);
    const json& d = j.at("domain");
    std::string kind = d.at("kind").get<std::string>();
    dom.kind = kind == "fk" ? DomainKind::Fk : (kind == "quad" ? DomainKind::Quad : DomainKind::Spin);
    const IsoradialGraph& g = dom.graph;
    for (int z : d.at("inner")) {
        Face f;
        f.rhombus = z;
        f.kind = FaceKind::Inner;
        f.center = g.rh(z).center;
        dom.register_face(f, detail::rhombus_sides(g, g.rh(z)));
    }
    dom.n_inner = static_cast<int>(dom.faces.size());
    // arcs are rebuilt face list by face list below
    for (const auto& a : d.at("arcs")) {
        Arc arc;
        arc.poly_color = a.at("color").get<std::string>() == "white" ? Color::White : Color::Black;
        arc.polyline = a.at("polyline").get<std::vector<int>>();
        arc.tau_along_walk = a.at("tau_along_walk").get<bool>();
        dom.arcs.push_back(std::move(arc));
    }
    for (const auto& b : d.at("boundary")) {
        Face f;
        f.rhombus = b.at("rhombus").get<int>();
        f.kind = b.at("cut").get<std::string>() == "white" ? FaceKind::WhiteTri : FaceKind::BlackTri;
        f.apex = b.at("apex").get<int>();
        f.d1 = b.at("d1").get<int>();
        f.d2 = b.at("d2").get<int>();
        f.arc = b.at("arc").get<int>();
        f.center = (g.pos(f.d1) + g.pos(f.d2)) / 2.0;
        FaceSide s1{g.edge_between(f.apex, f.d1), 0, 0};
        FaceSide s2{g.edge_between(f.apex, f.d2), 0, 0};
        auto fill = [&](FaceSide& s, int other) {
            s.vb = g.color(f.apex) == Color::Black ? f.apex : other;
            s.vw = g.color(f.apex) == Color::Black ? other : f.apex;
        };
        fill(s1, f.d1);
        fill(s2, f.d2);
        int idx = static_cast<int>(dom.faces.size());
        dom.register_face(f, {s1, s2});
        dom.arcs[f.arc].faces.push_back(idx);
    }
    for (const auto& m : d.at("marked")) {
        MarkedEdge me;
        me.vb = m.at("vb").get<int>();
        me.vw = m.at("vw").get<int>();
        me.edge = g.edge_between(me.vb, me.vw);
        const LatticeEdge& le = g.edges[me.edge];
        int zin = dom.face_of_rhombus(le.face0) != -1 ? le.face0 : le.face1;
        me.inner_face = dom.face_of_rhombus(zin);
        dom.marked.push_back(me);
    }
    if (dom.kind == DomainKind::Spin) {
        dom.spin_a = d.at("spin_a").get<int>();
        dom.spin_b = d.at("spin_b").get<int>();
    }
    if (!dom.marked.empty())
        dom.b_orientation = (g.pos(dom.marked[1].vb) - g.pos(dom.marked[1].vw)) / g.delta;
    dom.finalize_edges();
    return dom;
}

inline json vertex_field_to_json(const VertexField<double>& f) {
    json j = json::array();
    std::vector<int> keys;
    for (const auto& [v, x] : f.values()) keys.push_back(v);
    std::sort(keys.begin(), keys.end());
    for (int v : keys) j.push_back({{"id", v}, {"value", f.at(v)}});
    return j;
}

inline json observable_to_json(const ObservableTable& tab) {
    json j;
    j["model"] = tab.model;
    j["Z"] = tab.Z;
    j["wind_ab"] = tab.wind_ab;
    j["config_count"] = tab.config_count;
    j["normalization"] = {std::real(tab.normalization), std::imag(tab.normalization)};
    json edges = json::array();
    std::vector<int> keys;
    for (const auto& [e, v] : tab.edge_values) keys.push_back(e);
    std::sort(keys.begin(), keys.end());
    for (int e : keys) {
        cplx v = tab.edge_values.at(e);
        edges.push_back({{"edge", e}, {"re", std::real(v)}, {"im", std::imag(v)}});
    }
    j["edges"] = std::move(edges);
    json faces = json::array();
    for (std::size_t f = 0; f < tab.face_values.size(); ++f) {
        cplx v = tab.face_values.at(static_cast<int>(f));
        faces.push_back({{"face", f},
                         {"rhombus", tab.dom->faces[f].rhombus},
                         {"re", std::real(v)},
                         {"im", std::imag(v)}});
    }
    j["faces"] = std::move(faces);
    return j;
}

inline void write_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::BadInput, "write_json: cannot open " + path);
    out << j.dump(1) << "\n";
}

inline json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::BadInput, "read_json: cannot open " + path);
    json j;
    in >> j;
    return j;
}

}  // namespace isoising

#endif
