#ifndef ISOISING_EXPERIMENTS_HPP
#define ISOISING_EXPERIMENTS_HPP

#include <chrono>

#include "isoising/bvp.hpp"
#include "isoising/continuum.hpp"
#include "isoising/csv.hpp"
#include "isoising/dca.hpp"
#include "isoising/mc.hpp"
#include "isoising/svg.hpp"

namespace isoising::experiments {

struct CellResult {
    std::string name;
    bool pass = true;
    CsvTable table{{"check", "detail", "value", "bound", "pass"}};
    double seconds = 0.0;

    void row(const std::string& check, const std::string& detail, double value, double bound,
             bool ok) {
        table.add_row({check, detail, value, bound, std::string(ok ? "1" : "0")});
        pass = pass && ok;
    }
    /// value must stay below bound
    void below(const std::string& check, const std::string& detail, double value, double bound) {
        row(check, detail, value, bound, value < bound);
    }
    void atleast(const std::string& check, const std::string& detail, double value, double bound) {
        row(check, detail, value, bound, value >= bound);
    }
};

class Stopwatch {
  public:
    Stopwatch() : t0_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

  private:
    std::chrono::steady_clock::time_point t0_;
};

// ---------------------------------------------------------------------------
// Standard domain zoo.

inline DiscreteDomain fk_square_block(int nx, int ny, int margin = 1) {
    auto g = build_square(1.0, nx + 2 * margin, ny + 2 * margin);
    auto region = region_in_rect(g, margin, margin + nx, margin, margin + ny);
    int a = find_marked_edge_near(g, region, cplx(margin, margin + ny / 2.0), Color::Black);
    int b = find_marked_edge_near(g, region, cplx(margin + nx, margin + ny / 2.0), Color::White);
    return carve_dobrushin(g, region, a, b);
}

inline DiscreteDomain fk_random_block(std::uint64_t seed, double x0, double x1, double y0,
                                      double y1, int cells = 8) {
    auto g = build_random_rhombic(1.0, cells, cells, 0.2, seed);
    auto region = region_in_rect(g, x0, x1, y0, y1);
    int a = find_marked_edge_near(g, region, cplx(x0, (y0 + y1) / 2), Color::Black);
    int b = find_marked_edge_near(g, region, cplx(x1, (y0 + y1) / 2), Color::White);
    return carve_dobrushin(g, region, a, b);
}

inline DiscreteDomain spin_square_block(int nx, int ny, int margin = 1) {
    auto g = build_square(1.0, nx + 2 * margin, ny + 2 * margin);
    auto region = prune_spin_region(g, region_in_rect(g, margin, margin + nx, margin, margin + ny));
    int am = find_spin_mark_near(g, region, cplx(margin + nx / 2.0, margin + ny + 0.5));
    int bm = find_spin_mark_near(g, region, cplx(margin + nx / 2.0, margin - 0.5));
    return carve_spin(g, region, am, bm);
}

inline DiscreteDomain spin_random_block(std::uint64_t seed, double x0, double x1, double y0,
                                        double y1, int cells = 9) {
    auto g = build_random_rhombic(1.0, cells, cells, 0.18, seed);
    auto region = prune_spin_region(g, region_in_rect(g, x0, x1, y0, y1));
    int am = find_spin_mark_near(g, region, cplx((x0 + x1) / 2, y1 + 0.5));
    int bm = find_spin_mark_near(g, region, cplx((x0 + x1) / 2, y0 - 0.5));
    return carve_spin(g, region, am, bm);
}

inline cplx spin_unit_b(const DiscreteDomain& dom) {
    cplx u = inv_sqrt_dir(dom.tau(dom.spin_b));
    return u / std::abs(u);
}

// ---------------------------------------------------------------------------
// Criterion 1: identity suite.

inline void spin_table_case(CellResult& cell, SplitMix64& rng) {
    // geometry of two adjacent rhombi z0, z1 with common edge (u w1)
    double th0 = rng.uniform(0.08, kPi / 2 - 0.08);
    double th1 = rng.uniform(0.08, kPi / 2 - 0.08);
    double psi = rng.uniform(0, 2 * kPi);
    cplx u = 0.0;
    cplx w1 = std::polar(1.0, psi);
    cplx w0 = std::polar(1.0, psi + 2 * th0);
    cplx w2 = std::polar(1.0, psi - 2 * th1);
    cplx nu = inv_sqrt_dir(cplx(0, 1) * (w1 - u));

    auto amp = [&](cplx X) { return proj_amp(X, nu / std::abs(nu)); };
    double c0 = 1.0 / std::cos(th0 / 2), c1 = 1.0 / std::cos(th1 / 2);
    double t0 = std::tan(th0 / 2), t1 = std::tan(th1 / 2);

    cplx ph_a = inv_sqrt_dir(w1 - w0);  // e^{-i phi/2} for cases I and II
    ph_a /= std::abs(ph_a);
    cplx ph_b = inv_sqrt_dir(w0 - w1);  // cases III and IV
    ph_b /= std::abs(ph_b);
    cplx rot = std::exp(cplx(0, -(th0 + th1) / 2));
    cplx half_pi = std::exp(cplx(0, kPi / 2));

    struct Row {
        cplx x0, x1;
        double rel;  // expected relative contribution
    };
    Row rows[4] = {
        {c0 * ph_a, c1 * ph_a * rot, 1.0},
        {c0 * t1 * ph_a, c1 * ph_a * rot * half_pi, t1},
        {c0 * ph_b, c1 * t0 * ph_b * rot * half_pi, t0},
        {c0 * t1 * ph_b, c1 * t0 * ph_b * rot * (-1.0), t0 * t1},
    };
    double base = 0.0;
    for (int k = 0; k < 4; ++k) {
        double a0 = amp(rows[k].x0), a1 = amp(rows[k].x1);
        double equal_res = std::abs(a0 - a1);
        cell.below("spin-table-equal", "case " + std::to_string(k + 1), equal_res, 1e-13);
        if (k == 0)
            base = std::abs(a0);
        else
            cell.below("spin-table-ratio", "case " + std::to_string(k + 1),
                       std::abs(std::abs(a0) / base - rows[k].rel), 1e-13);
    }
}

inline CellResult identity_suite(std::uint64_t seed = 1) {
    Stopwatch sw;
    CellResult cell;
    cell.name = "identity";
    SplitMix64 rng(seed);

    double worst_fk = 0.0;
    for (int k = 0; k < 1000; ++k) {
        double th = rng.uniform(1e-3, kPi / 2 - 1e-3), ts = kPi / 2 - th;
        cplx lhs = std::sqrt(2.0) * std::sin(th / 2) + std::sin(ts / 2) -
                   cplx(0, 1) * std::sin(ts / 2);
        cplx rhs = std::exp(cplx(0, th)) * std::sin(ts / 2) +
                   std::exp(cplx(0, -ts)) * (std::sqrt(2.0) * std::sin(th / 2) + std::sin(ts / 2));
        worst_fk = std::max(worst_fk, std::abs(lhs - rhs));
    }
    cell.below("fk-table", "1000 angles", worst_fk, 1e-14);

    {
        CellResult sub;
        SplitMix64 rng2(seed + 1);
        for (int k = 0; k < 250; ++k) spin_table_case(sub, rng2);
        cell.row("spin-table", "250 random angle pairs, cases 1-4", sub.pass ? 0.0 : 1.0, 0.5,
                 sub.pass);
    }

    double worst_q = 0.0, worst_neg = 0.0;
    for (int k = 0; k < 1000; ++k) {
        double a = rng.uniform(0.05, kPi - 0.15);
        double b = rng.uniform(0.05, kPi - a - 0.07);
        double c = kPi - a - b;
        double x = rng.uniform(-2, 2), y = rng.uniform(-2, 2), z = rng.uniform(-2, 2);
        double q = qform_eval({a, b, c}, {x, y, z});
        worst_q = std::max(worst_q, std::abs(q - qform_sos3(a, b, c, x, y, z)));
        worst_neg = std::min(worst_neg, q);
    }
    cell.below("qform-sos", "1000 random triples", worst_q, 1e-12);
    cell.below("qform-nonneg", "1000 random triples", -worst_neg, 1e-12);

    cell.below("project", "(1,1) -> 1", std::abs(project(cplx(1, 0), cplx(1, 0)) - cplx(1, 0)),
               1e-14);
    cell.below("project", "(i,1) -> 0", std::abs(project(cplx(0, 1), cplx(1, 0))), 1e-14);

    auto dom = fk_square_block(3, 3);
    auto tab = enumerate_fk(dom);
    auto sr = spinor_roundtrip(dom, tab.face_values);
    double scale = tab.face_values.max_abs();
    cell.below("propagation", "enumerated fermion", sr.propagation_residual, 1e-10 * scale);
    cell.below("spinor-sign-flip", "enumerated fermion", sr.sign_flip_error, 1e-10 * scale);
    cell.below("spinor-roundtrip", "enumerated fermion", sr.reconstruction_error, 1e-12 * scale);

    cell.seconds = sw.seconds();
    return cell;
}

// ---------------------------------------------------------------------------
// Criterion 2: oracle equivalence.

struct OracleField {
    std::string name;
    DiscreteDomain dom;
    ObservableTable exact;
    FaceField solved;
};

inline std::vector<OracleField> oracle_fields() {
    std::vector<OracleField> out;
    auto add_fk = [&](const std::string& name, DiscreteDomain dom) {
        OracleField of;
        of.name = name;
        of.dom = std::move(dom);
        of.exact = enumerate_fk(of.dom);
        of.solved = solve_fk(of.dom).F;
        out.push_back(std::move(of));
    };
    auto add_spin = [&](const std::string& name, DiscreteDomain dom) {
        OracleField of;
        of.name = name;
        of.dom = std::move(dom);
        cplx ub = spin_unit_b(of.dom);
        of.exact = spin_fermion(of.dom, ub);
        of.solved = solve_spin(of.dom, ub).F;
        out.push_back(std::move(of));
    };
    add_fk("fk-square-1x1", fk_square_block(1, 1));
    add_fk("fk-square-3x2", fk_square_block(3, 2));
    add_fk("fk-square-3x3", fk_square_block(3, 3));
    add_fk("fk-square-4x3", fk_square_block(4, 3));
    add_fk("fk-square-corridor", fk_square_block(4, 1));
    add_fk("fk-random-1", fk_random_block(31, 2.6, 6.2, 2.6, 5.4, 9));
    add_fk("fk-random-2", fk_random_block(99, 2.6, 5.4, 2.6, 6.2, 9));
    add_spin("spin-square-4x3", spin_square_block(4, 3));
    add_spin("spin-square-5x3", spin_square_block(5, 3));
    add_spin("spin-random", spin_random_block(5, 2.6, 6.4, 2.6, 6.4));
    return out;
}

inline CellResult oracle_suite() {
    Stopwatch sw;
    CellResult cell;
    cell.name = "oracle-equivalence";
    auto fields = oracle_fields();
    for (const auto& of : fields) {
        double scale = std::max(1.0, of.exact.face_values.max_abs());
        auto rep = is_sholomorphic(of.dom, of.exact.face_values);
        cell.below("sholomorphic", of.name, rep.max_residual, 1e-10 * scale);
        double diff = 0.0;
        for (std::size_t f = 0; f < of.dom.faces.size(); ++f)
            diff = std::max(diff, std::abs(of.solved.at(static_cast<int>(f)) -
                                           of.exact.face_values.at(static_cast<int>(f))));
        cell.below("solver-vs-enumeration", of.name, diff, 1e-8 * scale);
    }
    {
        auto g = build_square(1.0, 5, 4);
        auto region = region_in_rect(g, 1, 4, 1, 3);
        int a = find_marked_edge_near(g, region, cplx(1.0, 1.5), Color::Black);
        int b = find_marked_edge_near(g, region, cplx(4.0, 2.5), Color::White);
        cell.below("martingale-fk", "3x2 block", martingale_check_fk(g, region, a, b), 1e-12);
    }
    {
        auto g = build_square(1.0, 6, 6);
        auto region = prune_spin_region(g, region_in_rect(g, 1, 5, 1, 4));
        int am = find_spin_mark_near(g, region, cplx(3.0, 4.5));
        int bm = find_spin_mark_near(g, region, cplx(3.0, 0.5));
        auto dom = carve_spin(g, region, am, bm);
        cell.below("martingale-spin", "octagon", martingale_check_spin(g, region, am, bm,
                                                                       spin_unit_b(dom)),
                   1e-12);
    }
    cell.seconds = sw.seconds();
    return cell;
}

// ---------------------------------------------------------------------------
// Criterion 3: H structure.

inline CellResult h_structure_suite() {
    Stopwatch sw;
    CellResult cell;
    cell.name = "h-structure";
    auto fields = oracle_fields();
    for (const auto& of : fields) {
        int base = of.dom.vertices().front();
        auto H = build_H(of.dom, of.exact.face_values, base, 0.0);
        double scale = std::max(1.0, of.exact.face_values.max_abs());
        cell.below("h-loop-closure", of.name, H.loop_residual, 1e-10 * scale * scale);
        auto ss = check_subsuper(of.dom, H);
        cell.below("h-subharmonic-black", of.name, -ss.worst_black, 1e-10 * scale * scale);
        cell.below("h-superharmonic-white", of.name, ss.worst_white, 1e-10 * scale * scale);
        double trick = 0.0, parallel = 0.0;
        for (const Arc& arc : of.dom.arcs)
            for (int fidx : arc.faces) {
                auto chk = boundary_trick_check(of.dom, of.exact.face_values, fidx);
                trick = std::max(trick, std::abs(chk.lhs - chk.rhs));
                trick = std::max(trick, std::abs(chk.via_fourth - chk.rhs));
                parallel = std::max(parallel, chk.parallel_defect);
            }
        cell.below("boundary-trick", of.name, trick, 1e-12 * scale * scale);
        if (of.dom.kind == DomainKind::Fk) {
            auto Hn = build_H(of.dom, of.exact.face_values, of.dom.arcs[0].polyline.front(), 0.0);
            double lo = 0.0, hi = 0.0;
            for (int v : of.dom.vertices()) {
                lo = std::min(lo, Hn.at(v));
                hi = std::max(hi, Hn.at(v));
            }
            cell.below("h-range-low", of.name, -lo, 1e-10);
            cell.below("h-range-high", of.name, hi - 1.0, 1e-10);
        }
    }
    cell.seconds = sw.seconds();
    return cell;
}

// ---------------------------------------------------------------------------
// Criterion 4: half-plane normalizer.

inline CellResult normalizer_suite() {
    Stopwatch sw;
    CellResult cell;
    cell.name = "normalizer";
    {
        auto g = build_diag_square(1.0, 260, 260);
        double side = 260.0 / std::sqrt(2.0);
        auto r = halfplane_normalizer(g, side, -32.0, 32.0);
        cell.below("square-exact", "n=32", std::abs(r.scalar - 1.0), 1e-6);
        cell.below("square-boundary-high", "n=32", r.boundary_max, 4.0);
        cell.atleast("square-boundary-low", "n=32", r.boundary_min, 0.25);
    }
    for (std::uint64_t seed : {21ULL, 77ULL}) {
        auto g = build_layered_random(1.0, 560, 560, kPi / 4, 0.05, seed);
        cplx lo(1e300, 1e300), hi(-1e300, -1e300);
        for (const Vertex& v : g.vertices) {
            lo = cplx(std::min(std::real(lo), std::real(v.pos)),
                      std::min(std::imag(lo), std::imag(v.pos)));
            hi = cplx(std::max(std::real(hi), std::real(v.pos)),
                      std::max(std::imag(hi), std::imag(v.pos)));
        }
        double xc = (std::real(lo) + std::real(hi)) / 2;
        double yc = (std::imag(lo) + std::imag(hi)) / 2;
        auto r16 = halfplane_normalizer(g, xc, yc - 16.0, 16.0);
        auto r32 = halfplane_normalizer(g, xc, yc - 32.0, 32.0);
        std::string name = "layered seed " + std::to_string(seed);
        cell.below("stability-16-32", name, std::abs(r16.scalar - r32.scalar), 1e-3);
        cell.below("mu-positive", name, -r32.mu, 0.0 + 1e-12);
        cell.below("boundary-high", name, r32.boundary_max, 4.0);
        cell.atleast("boundary-low", name, r32.boundary_min, 0.25);
    }
    cell.seconds = sw.seconds();
    return cell;
}

// ---------------------------------------------------------------------------
// Criterion 5: FK convergence on the unit square.

struct FkMeshRow {
    int N = 0;
    double sup_H = 0.0, sup_F = 0.0;
};

inline FkMeshRow converge_fk_cell(int N, const SquareFkReference& ref) {
    const double d = 1.0 / N;
    auto g = build_square(d, N + 2, N + 2);
    const cplx off(d, d);
    auto region = region_in_rect(g, d, d + 1, d, d + 1);
    int a = find_marked_edge_near(g, region, off + cplx(0.0, 0.5), Color::Black);
    int b = find_marked_edge_near(g, region, off + cplx(1.0, 0.5), Color::White);
    auto dom = carve_dobrushin(g, region, a, b);

    // the carve may rotate the embedding; map back to reference coordinates
    cplx lam = dom.graph.pos(1) / g.pos(1) * (std::abs(g.pos(1)) / std::abs(dom.graph.pos(1)));
    auto to_ref = [&](cplx z) { return z / lam - off; };
    cplx sq_lam = sqrt_dir(lam);

    auto sol = solve_fk(dom);
    auto H = build_H(dom, sol.F, dom.arcs[0].polyline.front(), 0.0);

    FkMeshRow row;
    row.N = N;
    const cplx center(0.5, 0.5);
    for (int v : dom.vertices()) {
        cplx z = to_ref(dom.graph.pos(v));
        if (std::abs(z - center) > 0.25) continue;
        row.sup_H = std::max(row.sup_H, std::abs(H.at(v) - ref.h(z)));
    }
    std::vector<int> faces;
    std::vector<cplx> pts;
    for (std::size_t f = 0; f < dom.faces.size(); ++f) {
        cplx z = to_ref(dom.faces[f].center);
        if (std::abs(z - center) > 0.25) continue;
        faces.push_back(static_cast<int>(f));
        pts.push_back(z);
    }
    std::vector<std::size_t> order(pts.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return std::abs(pts[i] - center) < std::abs(pts[j] - center);
    });
    std::vector<cplx> spts, sfsq;
    for (std::size_t i : order) {
        spts.push_back(pts[i]);
        sfsq.push_back(ref.f_squared(pts[i]));
    }
    auto fref = continuous_sqrt(spts, sfsq);
    // global sign aligned at the innermost point
    cplx F0 = sol.F.at(faces[order[0]]) * sq_lam;
    double sgn = std::abs(F0 - fref[0]) <= std::abs(F0 + fref[0]) ? 1.0 : -1.0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        cplx Fd = sol.F.at(faces[order[i]]) * sq_lam;
        row.sup_F = std::max(row.sup_F, std::abs(Fd - sgn * fref[i]));
    }
    return row;
}

inline CellResult converge_fk_suite(std::vector<int> Ns = {8, 16, 32, 64}) {
    Stopwatch sw;
    CellResult cell;
    cell.name = "converge-fk";
    SquareFkReference ref;
    std::vector<FkMeshRow> rows;
    for (int N : Ns) rows.push_back(converge_fk_cell(N, ref));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        std::string d = "delta=1/" + std::to_string(rows[k].N);
        cell.table.add_row({std::string("sup-H"), d, rows[k].sup_H, 0.0, std::string("-")});
        cell.table.add_row({std::string("sup-F"), d, rows[k].sup_F, 0.0, std::string("-")});
        if (k > 0) {
            cell.row("sup-H-decreasing", d, rows[k].sup_H, rows[k - 1].sup_H,
                     rows[k].sup_H < rows[k - 1].sup_H);
            cell.row("sup-F-decreasing", d, rows[k].sup_F, rows[k - 1].sup_F,
                     rows[k].sup_F < rows[k - 1].sup_F);
        }
    }
    cell.below("sup-H-final", "delta=1/" + std::to_string(Ns.back()), rows.back().sup_H, 0.05);
    cell.seconds = sw.seconds();
    return cell;
}

// ---------------------------------------------------------------------------
// Criterion 6: spin convergence on the rectangle (-1,1) x (0,1).

struct SpinMeshRow {
    int N = 0;
    double sup_F = 0.0, min_H = 0.0, a_defect = 0.0;
};

inline SpinMeshRow converge_spin_cell(int N, const RectSpinReference& ref) {
    const double d = 1.0 / N;
    int cells = static_cast<int>(std::ceil(3.4 * N));
    auto g = build_diag_square(d, cells, cells);
    double side = cells * d / std::sqrt(2.0);  // diamond half-height, center x
    // snap the bottom to a white row through the diamond center
    int wstar = -1;
    double bd = 1e300;
    for (const Vertex& v : g.vertices) {
        if (v.color != Color::White) continue;
        double dist = std::abs(v.pos - cplx(side, 0.0));
        if (dist < bd) {
            bd = dist;
            wstar = v.id;
        }
    }
    double xb = std::real(g.pos(wstar)), yb = std::imag(g.pos(wstar));
    auto region = prune_spin_region(
        g, region_in_rect(g, xb - 1.0, xb + 1.0, yb - 0.35 * d, yb - 0.35 * d + 1.0));
    int am = find_spin_mark_near(g, region, cplx(xb, yb + 1.0));
    int bm = find_spin_mark_near(g, region, cplx(xb, yb));
    auto dom = carve_spin(g, region, am, bm);

    cplx ub = spin_unit_b(dom);
    auto sol = solve_spin(dom, ub);
    cplx anchor = dom.faces[dom.spin_b].center;
    auto to_ref = [&](cplx z) { return z - cplx(std::real(anchor), yb); };

    SpinMeshRow row;
    row.N = N;
    const cplx center(0.0, 0.5);
    std::vector<int> faces;
    std::vector<cplx> pts;
    for (std::size_t f = 0; f < dom.faces.size(); ++f) {
        cplx z = to_ref(dom.faces[f].center);
        if (std::abs(z - center) > 0.25) continue;
        faces.push_back(static_cast<int>(f));
        pts.push_back(z);
    }
    std::vector<std::size_t> order(pts.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return std::abs(pts[i] - center) < std::abs(pts[j] - center);
    });
    std::vector<cplx> spts, sfsq;
    for (std::size_t i : order) {
        spts.push_back(pts[i]);
        sfsq.push_back(ref.f_squared(pts[i]));
    }
    auto fref = continuous_sqrt(spts, sfsq);
    cplx F0 = sol.F.at(faces[order[0]]);
    double sgn = std::abs(F0 - fref[0]) <= std::abs(F0 + fref[0]) ? 1.0 : -1.0;
    for (std::size_t i = 0; i < order.size(); ++i)
        row.sup_F = std::max(row.sup_F,
                             std::abs(sol.F.at(faces[order[i]]) - sgn * fref[i]));

    auto H = build_H(dom, sol.F, dom.arcs[0].polyline.front(), 0.0);
    row.min_H = 0.0;
    for (int v : dom.vertices()) row.min_H = std::min(row.min_H, H.at(v));

    cplx dir = cplx(0, 1) * inv_sqrt_dir(dom.tau(dom.spin_a));
    cplx fa = sol.F.at(dom.spin_a);
    row.a_defect = std::abs(std::imag(fa * std::conj(dir) / std::abs(dir))) /
                   std::max(1e-300, std::abs(fa));
    return row;
}

inline CellResult converge_spin_suite(std::vector<int> Ns = {8, 16, 32, 64}) {
    Stopwatch sw;
    CellResult cell;
    cell.name = "converge-spin";
    RectSpinReference ref;
    std::vector<SpinMeshRow> rows;
    for (int N : Ns) rows.push_back(converge_spin_cell(N, ref));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        std::string d = "delta=1/" + std::to_string(rows[k].N);
        cell.table.add_row({std::string("sup-F"), d, rows[k].sup_F, 0.0, std::string("-")});
        if (k > 0)
            cell.row("sup-F-decreasing", d, rows[k].sup_F, rows[k - 1].sup_F,
                     rows[k].sup_F < rows[k - 1].sup_F);
        cell.below("H-nonnegative", d, -rows[k].min_H, 1e-10);
        cell.below("a-parallelism", d, rows[k].a_defect, 1e-8);
    }
    cell.seconds = sw.seconds();
    return cell;
}

// ---------------------------------------------------------------------------
// Criterion 7: crossing suite.

inline CellResult crossing_suite(std::uint64_t seed = 20240901,
                                 long long selfdual_sweeps = 150000,
                                 long long rect_sweeps = 400000) {
    Stopwatch sw;
    CellResult cell;
    cell.name = "crossing";

    // (a) chain vs enumeration on two small quads
    {
        auto dom = make_rect_quad(4, 3);
        auto exact = crossing_exact(dom);
        auto rep = mcmc_crossing(dom, 200000, seed);
        cell.below("mcmc-vs-exact", "square 4x3 quad", std::abs(rep.P_hat - exact.P),
                   3 * rep.sigma);
    }
    {
        auto g = build_random_rhombic(1.0, 8, 8, 0.18, 5);
        auto region = region_in_rect(g, 2.2, 6.0, 2.2, 5.2);
        int a = find_marked_edge_near(g, region, cplx(2.2, 2.2), Color::Black);
        int b = find_marked_edge_near(g, region, cplx(6.0, 2.2), Color::White);
        int c = find_marked_edge_near(g, region, cplx(6.0, 5.2), Color::Black);
        int dd = find_marked_edge_near(g, region, cplx(2.2, 5.2), Color::White);
        auto dom = carve_quad(g, region, a, b, c, dd);
        auto exact = crossing_exact(dom);
        auto rep = mcmc_crossing(dom, 200000, seed + 1);
        cell.below("mcmc-vs-exact", "random rhombic quad", std::abs(rep.P_hat - exact.P),
                   3 * rep.sigma);
    }
    // (b) self-dual square: exact 1/2, chain at N = 32
    {
        auto dom = make_selfdual_quad(1);
        auto exact = crossing_exact(dom);
        cell.below("selfdual-exact", "m=1", std::abs(exact.P - 0.5), 1e-12);
    }
    {
        auto dom = make_selfdual_quad(16);  // 33 x 33 rhombi
        auto rep = mcmc_crossing(dom, selfdual_sweeps, seed + 2);
        cell.below("selfdual-mcmc", "N=33", std::abs(rep.P_hat - 0.5), 3 * rep.sigma);
        cell.below("selfdual-sigma", "N=33", rep.sigma, 0.005);
    }
    // (c) rectangles of aspect 1/2, 1, 2
    for (double rho : {0.5, 1.0, 2.0}) {
        double prev = 1e300;
        for (int N : {16, 32, 64}) {
            int W = static_cast<int>(std::lround(rho >= 1 ? rho * N : N));
            int H = static_cast<int>(std::lround(rho >= 1 ? N : N / rho));
            auto dom = make_rect_quad(W, H);
            double u = modulus_to_u(static_cast<double>(W) / H);
            double p = crossing_formula(u);
            long long sweeps = rect_sweeps / (N == 16 ? 2 : 1);
            auto rep = mcmc_crossing(dom, sweeps, seed + 10 + N + static_cast<int>(10 * rho));
            double err = std::abs(rep.P_hat - p);
            std::string nm = "rho=" + std::to_string(rho) + " N=" + std::to_string(N);
            cell.table.add_row({std::string("crossing-error"), nm, err, 0.0, std::string("-")});
            cell.below("crossing-sigma", nm, rep.sigma, 0.005);
            if (N > 16)
                cell.row("crossing-error-decreasing", nm, err, prev, err < prev);
            if (N == 64) cell.below("crossing-error-final", nm, err, 0.03);
            prev = err;
        }
    }
    // (d) kappa <-> p roundtrip
    {
        SplitMix64 rng(seed + 99);
        double worst = 0.0;
        for (int k = 0; k < 1000; ++k) {
            double x = rng.uniform();
            worst = std::max(worst, std::abs(p_of_kappa(kappa_of_p(x)) - x));
        }
        cell.below("kappa-p-roundtrip", "1000 random", worst, 1e-12);
    }
    // (e) disc identity
    {
        SplitMix64 rng(seed + 100);
        double worst = 0.0;
        for (int k = 0; k < 1000; ++k) {
            double phi = rng.uniform(1e-3, kPi / 2 - 1e-3);
            double u = std::sin(phi) * std::sin(phi);
            double lhs = crossing_formula(u) / crossing_formula(1 - u);
            double rhs = std::sin(phi / 2) / std::sin(kPi / 4 - phi / 2);
            worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, rhs));
        }
        cell.below("disc-identity", "1000 random angles", worst, 1e-10);
    }
    cell.seconds = sw.seconds();
    return cell;
}

// ---------------------------------------------------------------------------
// Criterion 8: appendix estimate suites.

struct FitSummary {
    std::vector<std::pair<std::string, double>> fits;  // (label, fitted constant)
};

inline int black_vertex_near(const IsoradialGraph& g, cplx p) {
    int best = -1;
    double bd = 1e300;
    for (const Vertex& v : g.vertices) {
        if (v.color != Color::Black) continue;
        double d = std::abs(v.pos - p);
        if (d < bd) {
            bd = d;
            best = v.id;
        }
    }
    return best;
}

/// Worst-case half-disc ratio over all single-point harmonic measures.
inline double harnack_constant(const IsoradialGraph& g, int center, double R) {
    auto region = disc_region(g, Color::Black, center, R);
    DirichletOperator op(region);
    double C = 1.0;
    for (int a : region.boundary) {
        VertexField<double> b(&g);
        for (int v : region.boundary) b.set(v, v == a ? 1.0 : 0.0);
        auto h = op.solve(b);
        double lo = 1e300, hi = 0.0;
        for (int v : region.interior) {
            if (std::abs(g.pos(v) - g.pos(center)) > R / 2) continue;
            lo = std::min(lo, h.at(v));
            hi = std::max(hi, h.at(v));
        }
        if (lo > 0) C = std::max(C, hi / lo);
    }
    return C;
}

inline double beurling_exponent(const IsoradialGraph& g, cplx corner, double r) {
    // square domain of side 4r; observation points at heights d1 above the
    // bottom mid; far set = boundary outside distance r
    auto region = rect_region(g, Color::Black, std::real(corner), std::real(corner) + 4 * r,
                              std::imag(corner), std::imag(corner) + 4 * r);
    cplx base = corner + cplx(2 * r, 0.0);
    std::vector<double> lx, ly;
    for (double d1 : {r / 16, r / 8, r / 4, r / 2}) {
        int u = black_vertex_near(g, base + cplx(0.0, d1));
        if (!region.is_interior(u)) continue;
        std::vector<int> E;
        for (int a : region.boundary)
            if (std::abs(g.pos(a) - g.pos(u)) >= r) E.push_back(a);
        double w = harmonic_measure(region, E, u);
        double dist1 = std::imag(g.pos(u)) - std::imag(corner);
        if (w > 0 && dist1 > 0) {
            lx.push_back(std::log(dist1 / r));
            ly.push_back(std::log(w));
        }
    }
    if (lx.size() < 3) fail(ErrorKind::NonConvergent, "beurling_exponent: too few samples");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    double n = static_cast<double>(lx.size());
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline CellResult appendix_suite() {
    Stopwatch sw;
    CellResult cell;
    cell.name = "appendix";

    struct Fam {
        std::string name;
        IsoradialGraph g;
    };
    std::vector<Fam> fams;
    fams.push_back({"square", build_square(1.0, 140, 140)});
    fams.push_back({"random-rhombic", build_random_rhombic(1.0, 140, 140, 0.2, 7)});

    // rectangle exit probabilities, verbatim inequalities
    for (const Fam& fam : fams) {
        const IsoradialGraph& g = fam.g;
        const double d = g.delta;
        for (double t : {8.0, 16.0}) {
            double s = 2 * t;
            cplx c0(70.0 - s, 60.0 - t / 2);  // rectangle (-s,s)x(0,t) shifted into the graph
            auto region = closed_rect_region(g, Color::Black, std::real(c0), std::real(c0) + 2 * s,
                                             std::imag(c0), std::imag(c0) + t);
            std::vector<int> U, V;
            for (int a : region.boundary) {
                cplx p = g.pos(a) - c0;
                if (std::imag(p) >= t)
                    U.push_back(a);
                else if (std::imag(p) > 0 &&
                         (std::real(p) <= 0 || std::real(p) >= 2 * s))
                    V.push_back(a);
            }
            auto wu = harmonic_measure_field(region, U);
            auto wv = harmonic_measure_field(region, V);
            double worst = 0.0;
            for (int v : region.interior) {
                cplx p = g.pos(v) - c0;
                double x = std::real(p) - s, y = std::imag(p);
                double upper = (y + 2 * d) / (t + 2 * d);
                double corr = (x * x + (y + 2 * d) * (t + 2 * d - y)) / (s * s);
                double lower = y / (t + 2 * d) - corr;
                worst = std::max(worst, wu.at(v) - upper);
                worst = std::max(worst, lower - wu.at(v));
                worst = std::max(worst, wv.at(v) - corr);
            }
            cell.below("rect-exit-verbatim", fam.name + " t=" + std::to_string((int)t), worst,
                       1e-12);
        }
    }

    // Harnack constants, stable within x2 across sizes and families
    {
        std::vector<double> cs;
        for (const Fam& fam : fams) {
            int center = black_vertex_near(fam.g, cplx(70, 70));
            for (double R : {16.0, 32.0}) {
                double C = harnack_constant(fam.g, center, R);
                cell.table.add_row({std::string("harnack-fit"),
                                    fam.name + " R=" + std::to_string((int)R), C, 0.0,
                                    std::string("-")});
                cs.push_back(C);
            }
        }
        double lo = *std::min_element(cs.begin(), cs.end());
        double hi = *std::max_element(cs.begin(), cs.end());
        cell.below("harnack-stable", "max/min across sizes and families", hi / lo, 2.0);
    }

    // weak Beurling exponent
    for (const Fam& fam : fams) {
        std::vector<double> betas;
        for (double r : {16.0, 32.0}) {
            double beta = beurling_exponent(fam.g, cplx(3.0, 3.0), r);
            cell.table.add_row({std::string("beurling-fit"),
                                fam.name + " r=" + std::to_string((int)r), beta, 0.0,
                                std::string("-")});
            cell.atleast("beurling-positive", fam.name + " r=" + std::to_string((int)r), beta,
                         0.2);
            betas.push_back(beta);
        }
        cell.below("beurling-stable", fam.name, std::max(betas[0], betas[1]) /
                                                     std::min(betas[0], betas[1]),
                   2.0);
    }

    // exit probabilities in the disc: omega * r / delta within [1/C, C]
    for (const Fam& fam : fams) {
        std::vector<double> cs;
        for (double r : {8.0, 16.0, 32.0}) {
            int center = black_vertex_near(fam.g, cplx(70, 70));
            auto region = disc_region(fam.g, Color::Black, center, r);
            DirichletOperator op(region);
            double C = 1.0;
            for (int a : region.boundary) {
                VertexField<double> b(&fam.g);
                for (int v : region.boundary) b.set(v, v == a ? 1.0 : 0.0);
                double w = op.solve(b).at(center) * r / fam.g.delta;
                C = std::max(C, std::max(w, 1.0 / w));
            }
            cell.table.add_row({std::string("disc-exit-fit"),
                                fam.name + " r=" + std::to_string((int)r), C, 0.0,
                                std::string("-")});
            cs.push_back(C);
        }
        double lo = *std::min_element(cs.begin(), cs.end());
        double hi = *std::max_element(cs.begin(), cs.end());
        cell.below("disc-exit-stable", fam.name, hi / lo, 2.0);
    }

    // Green function L1 lower bound and gradient L1 upper bound
    for (const Fam& fam : fams) {
        std::vector<double> cs, gs;
        for (double r : {8.0, 16.0, 32.0}) {
            int center = black_vertex_near(fam.g, cplx(70, 70));
            auto region = disc_region(fam.g, Color::Black, center, r);
            auto G = green_function(region, center);
            double l1 = 0.0;
            for (int v : region.interior) l1 += fam.g.mu(v) * std::abs(G.at(v));
            cs.push_back(l1 / (r * r));
            // gradient over the 2r/3 sub-disc: black-diagonal difference
            // quotients, since G lives on one sublattice
            double g1 = 0.0;
            for (const Rhombus& rh : fam.g.rhombi) {
                if (std::abs(rh.center - fam.g.pos(center)) > 2 * r / 3) continue;
                if (!G.has(rh.u1) || !G.has(rh.u2)) continue;
                double area = fam.g.delta * fam.g.delta * std::sin(2 * rh.theta) / 2;
                cplx q = (G.at(rh.u1) - G.at(rh.u2)) /
                         (fam.g.pos(rh.u1) - fam.g.pos(rh.u2));
                g1 += area * std::abs(q);
            }
            gs.push_back(g1 / r);
            cell.table.add_row({std::string("green-l1-fit"),
                                fam.name + " r=" + std::to_string((int)r), cs.back(), 0.0,
                                std::string("-")});
            cell.table.add_row({std::string("green-grad-fit"),
                                fam.name + " r=" + std::to_string((int)r), gs.back(), 0.0,
                                std::string("-")});
        }
        auto stable = [&](const std::vector<double>& v, const std::string& label) {
            double lo = *std::min_element(v.begin(), v.end());
            double hi = *std::max_element(v.begin(), v.end());
            cell.below(label, fam.name, hi / lo, 2.0);
        };
        stable(cs, "green-l1-stable");
        stable(gs, "green-grad-stable");
    }

    cell.seconds = sw.seconds();
    return cell;
}

}  // namespace isoising::experiments

#endif
