// iso-ising: batch experiment runner for the critical FK/spin Ising toolbox.
//
//   iso-ising <kind> --manifest m.json [--out DIR] [--seed N] [--param k=v]
//
// Kinds: lattice-gen | fermion-exact | fermion-bvp | checks | converge-fk |
//        converge-spin | crossing | appendix-suite.
// Manifests are the source of truth; flags override single fields.  All
// stochastic kinds must be seeded; CSV/JSON/SVG outputs are byte-identical
// across reruns.  ISO_ISING_THREADS caps the worker count.

#include <CLI11.hpp>

#include "isoising/manifest.hpp"
#include "isoising/svg.hpp"

using namespace isoising;
namespace ex = isoising::experiments;

namespace {

IsoradialGraph lattice_from_params(const Manifest& m) {
    std::string kind = m.param_str("lattice", "square");
    double delta = m.param("delta", 1.0);
    int nx = static_cast<int>(m.param("nx", 8));
    int ny = static_cast<int>(m.param("ny", 8));
    if (kind == "square") return build_square(delta, nx, ny);
    if (kind == "diag-square") return build_diag_square(delta, nx, ny);
    if (kind == "random-rhombic")
        return build_random_rhombic(delta, nx, ny, m.param("jitter", 0.2), m.seed);
    if (kind == "layered-random")
        return build_layered_random(delta, nx, ny, m.param("base", kPi / 4),
                                    m.param("jitter", 0.05), m.seed);
    if (kind == "rhombic") {
        auto alphas = m.params.at("alphas").get<std::vector<double>>();
        auto betas = m.params.at("betas").get<std::vector<double>>();
        return build_rhombic(delta, alphas, betas, m.param("eta", 0.2));
    }
    fail(ErrorKind::ManifestError, "lattice-gen: unknown lattice '" + kind + "'");
}

DiscreteDomain domain_from_params(const Manifest& m) {
    if (m.params.contains("domain_file"))
        return domain_from_json(read_json(m.param_str("domain_file", "")));
    std::string shape = m.param_str("domain", "fk-square");
    if (shape == "fk-square")
        return ex::fk_square_block(static_cast<int>(m.param("nx", 3)),
                                   static_cast<int>(m.param("ny", 3)));
    if (shape == "spin-square")
        return ex::spin_square_block(static_cast<int>(m.param("nx", 4)),
                                     static_cast<int>(m.param("ny", 3)));
    if (shape == "quad-rect")
        return make_rect_quad(static_cast<int>(m.param("nx", 4)),
                              static_cast<int>(m.param("ny", 3)));
    if (shape == "quad-selfdual") return make_selfdual_quad(static_cast<int>(m.param("m", 1)));
    fail(ErrorKind::ManifestError, "unknown domain shape '" + shape + "'");
}

void emit_observable(const Manifest& m, const DiscreteDomain& dom, const ObservableTable& tab,
                     const std::string& stem) {
    write_atomic(m.out_dir + "/" + stem + ".json", observable_to_json(tab).dump(1) + "\n");
    std::vector<double> mag(dom.faces.size());
    double hi = 0;
    for (std::size_t f = 0; f < dom.faces.size(); ++f) {
        mag[f] = std::abs(tab.face_values.at(static_cast<int>(f)));
        hi = std::max(hi, mag[f]);
    }
    write_atomic(m.out_dir + "/" + stem + "_absF.svg", svg_face_heatmap(dom, mag, 0.0, hi));
}

int run_manifest(const Manifest& m) {
    std::filesystem::create_directories(m.out_dir);
    if (m.kind == "lattice-gen") {
        auto g = lattice_from_params(m);
        validate(g);
        write_atomic(m.out_dir + "/graph.json", graph_to_json(g).dump(1) + "\n");
        std::printf("lattice-gen: %zu vertices, %zu rhombi -> %s/graph.json\n",
                    g.vertices.size(), g.rhombi.size(), m.out_dir.c_str());
        return 0;
    }
    if (m.kind == "fermion-exact" || m.kind == "fermion-bvp") {
        auto dom = domain_from_params(m);
        write_atomic(m.out_dir + "/domain.json", domain_to_json(dom).dump(1) + "\n");
        CsvTable diag({"quantity", "value"});
        if (dom.kind == DomainKind::Spin) {
            cplx ub = ex::spin_unit_b(dom);
            ObservableTable tab;
            if (m.kind == "fermion-exact") {
                tab = spin_fermion(dom, ub);
            } else {
                auto sol = solve_spin(dom, ub);
                tab.dom = &dom;
                tab.model = "spin";
                tab.face_values = sol.F;
                tab.normalization = ub;
                diag.add_row({std::string("solver_residual"), sol.residual});
            }
            auto rep = is_sholomorphic(dom, tab.face_values);
            diag.add_row({std::string("sholomorphic_residual"), rep.max_residual});
            emit_observable(m, dom, tab, "observable");
        } else {
            ObservableTable tab;
            if (m.kind == "fermion-exact") {
                tab = enumerate_fk(dom);
                diag.add_row({std::string("Z"), tab.Z});
            } else {
                auto sol = solve_fk(dom);
                tab.dom = &dom;
                tab.model = "fk";
                tab.face_values = sol.F;
                diag.add_row({std::string("solver_residual"), sol.residual});
                if (dom.n_inner <= 20) {
                    auto exact = enumerate_fk(dom);
                    double diff = 0;
                    for (std::size_t f = 0; f < dom.faces.size(); ++f)
                        diff = std::max(diff, std::abs(sol.F.at(static_cast<int>(f)) -
                                                       exact.face_values.at(static_cast<int>(f))));
                    diag.add_row({std::string("max_diff_vs_enumeration"), diff});
                }
            }
            auto rep = is_sholomorphic(dom, tab.face_values);
            diag.add_row({std::string("sholomorphic_residual"), rep.max_residual});
            emit_observable(m, dom, tab, "observable");
            auto H = build_H(dom, tab.face_values, dom.arcs[0].polyline.front(), 0.0);
            std::vector<double> hv(dom.faces.size());
            for (std::size_t f = 0; f < dom.faces.size(); ++f) {
                const Face& face = dom.faces[f];
                int v = face.kind == FaceKind::Inner ? dom.graph.rh(face.rhombus).u1 : face.apex;
                hv[f] = H.at(v);
            }
            write_atomic(m.out_dir + "/H.svg", svg_face_heatmap(dom, hv, 0.0, 1.0));
        }
        write_atomic(m.out_dir + "/diagnostics.csv", diag.to_string());
        std::printf("%s: outputs in %s\n", m.kind.c_str(), m.out_dir.c_str());
        return 0;
    }
    if (m.kind == "checks") {
        std::vector<ex::CellResult> cells(3);
        run_cells({[&]() { cells[0] = ex::identity_suite(m.has_seed ? m.seed : 1); },
                   [&]() { cells[1] = ex::oracle_suite(); },
                   [&]() { cells[2] = ex::h_structure_suite(); }});
        bool pass = true;
        for (auto& c : cells) {
            write_atomic(m.out_dir + "/" + c.name + ".csv", c.table.to_string());
            std::printf("[%s] %s (%.1f s)\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.seconds);
            pass = pass && c.pass;
        }
        return pass ? 0 : 2;
    }
    if (m.kind == "converge-fk" || m.kind == "converge-spin") {
        auto Ns = m.param_ints("meshes", {8, 16, 32, 64});
        ex::CellResult cell;
        if (m.kind == "converge-fk") {
            SquareFkReference ref;
            std::vector<ex::FkMeshRow> rows(Ns.size());
            std::vector<std::function<void()>> jobs;
            for (std::size_t i = 0; i < Ns.size(); ++i)
                jobs.push_back([&, i]() { rows[i] = ex::converge_fk_cell(Ns[i], ref); });
            run_cells(std::move(jobs));
            CsvTable tab({"mesh", "sup_H_error", "sup_F_error"});
            PlotSeries sh{"sup |H - h|", "#1f5fbf", {}}, sf{"sup |F - f|", "#bf3f1f", {}};
            for (const auto& r : rows) {
                tab.add_row({std::string("1/") + std::to_string(r.N), r.sup_H, r.sup_F});
                sh.points.push_back({std::log2(r.N), r.sup_H});
                sf.points.push_back({std::log2(r.N), r.sup_F});
            }
            write_atomic(m.out_dir + "/converge_fk.csv", tab.to_string());
            write_atomic(m.out_dir + "/converge_fk.svg", svg_line_plot({sh, sf}));
            bool mono = true;
            for (std::size_t i = 1; i < rows.size(); ++i)
                mono = mono && rows[i].sup_H < rows[i - 1].sup_H && rows[i].sup_F < rows[i - 1].sup_F;
            std::printf("converge-fk: monotone=%d final sup_H=%.4f sup_F=%.4f\n", mono ? 1 : 0,
                        rows.back().sup_H, rows.back().sup_F);
            return mono && rows.back().sup_H < 0.05 ? 0 : 2;
        }
        RectSpinReference ref;
        std::vector<ex::SpinMeshRow> rows(Ns.size());
        std::vector<std::function<void()>> jobs;
        for (std::size_t i = 0; i < Ns.size(); ++i)
            jobs.push_back([&, i]() { rows[i] = ex::converge_spin_cell(Ns[i], ref); });
        run_cells(std::move(jobs));
        CsvTable tab({"mesh", "sup_F_error", "min_H", "a_parallelism_defect"});
        PlotSeries sf{"sup |F - f|", "#bf3f1f", {}};
        for (const auto& r : rows) {
            tab.add_row({std::string("1/") + std::to_string(r.N), r.sup_F, r.min_H, r.a_defect});
            sf.points.push_back({std::log2(r.N), r.sup_F});
        }
        write_atomic(m.out_dir + "/converge_spin.csv", tab.to_string());
        write_atomic(m.out_dir + "/converge_spin.svg", svg_line_plot({sf}));
        bool mono = true;
        for (std::size_t i = 1; i < rows.size(); ++i) mono = mono && rows[i].sup_F < rows[i - 1].sup_F;
        std::printf("converge-spin: monotone=%d final sup_F=%.4f\n", mono ? 1 : 0,
                    rows.back().sup_F);
        return mono ? 0 : 2;
    }
    if (m.kind == "crossing") {
        // exact and sampled crossings with the continuum formula overlay
        CsvTable tab({"domain", "N", "u", "P_hat", "sigma", "kappa_hat", "p_formula"});
        std::vector<double> rhos = {0.5, 1.0, 2.0};
        auto Ns = m.param_ints("sizes", {16, 32});
        long long sweeps = static_cast<long long>(m.param("sweeps", 200000));
        std::vector<std::vector<CsvTable::Cell>> rows;
        std::vector<std::function<void()>> jobs;
        std::mutex mu;
        for (double rho : rhos)
            for (int N : Ns)
                jobs.push_back([&, rho, N]() {
                    int W = static_cast<int>(std::lround(rho >= 1 ? rho * N : N));
                    int H = static_cast<int>(std::lround(rho >= 1 ? N : N / rho));
                    auto dom = make_rect_quad(W, H);
                    double u = modulus_to_u(static_cast<double>(W) / H);
                    auto rep = mcmc_crossing(dom, sweeps,
                                             m.seed + static_cast<int>(100 * rho) + N);
                    std::lock_guard<std::mutex> lk(mu);
                    rows.push_back({std::string("rect-") + std::to_string(W) + "x" +
                                        std::to_string(H),
                                    static_cast<long long>(N), u, rep.P_hat, rep.sigma,
                                    rep.kappa_hat, crossing_formula(u)});
                });
        run_cells(std::move(jobs));
        std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
            return CsvTable::format(a[0]) + CsvTable::format(a[1]) <
                   CsvTable::format(b[0]) + CsvTable::format(b[1]);
        });
        for (auto& r : rows) tab.add_row(r);
        write_atomic(m.out_dir + "/crossing.csv", tab.to_string());
        // formula table u -> p(u)
        CsvTable ft({"u", "p"});
        PlotSeries curve{"formula p(u)", "#1f5fbf", {}};
        for (int k = 0; k <= 10; ++k) {
            double u = k / 10.0;
            ft.add_row({u, crossing_formula(u)});
            curve.points.push_back({u, crossing_formula(u)});
        }
        PlotSeries dots{"sampled", "#bf3f1f", {}};
        for (auto& r : rows)
            dots.points.push_back({std::get<double>(r[2]), std::get<double>(r[3])});
        std::sort(dots.points.begin(), dots.points.end());
        write_atomic(m.out_dir + "/crossing_formula.csv", ft.to_string());
        write_atomic(m.out_dir + "/crossing.svg", svg_line_plot({curve, dots}));
        std::printf("crossing: %zu cells -> %s\n", rows.size(), m.out_dir.c_str());
        return 0;
    }
    if (m.kind == "appendix-suite") {
        auto cell = ex::appendix_suite();
        write_atomic(m.out_dir + "/appendix.csv", cell.table.to_string());
        std::printf("[%s] appendix estimates (%.1f s)\n", cell.pass ? "PASS" : "FAIL",
                    cell.seconds);
        return cell.pass ? 0 : 2;
    }
    fail(ErrorKind::ManifestError, "unhandled kind");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"critical FK/spin Ising on isoradial graphs: experiment runner"};
    app.require_subcommand(1);

    std::string manifest_path;
    std::string out_override;
    std::uint64_t seed_override = 0;
    bool seed_given = false;

    static const char* kinds[] = {"lattice-gen", "fermion-exact", "fermion-bvp",
                                  "checks",      "converge-fk",   "converge-spin",
                                  "crossing",    "appendix-suite"};
    std::vector<std::string> kvs;
    for (const char* k : kinds) {
        auto* sub = app.add_subcommand(k, "");
        sub->add_option("--manifest", manifest_path, "manifest JSON file");
        sub->add_option("--out", out_override, "output directory override");
        sub->add_option("--seed", seed_override, "seed override")->each([&](const std::string&) {
            seed_given = true;
        });
        sub->add_option("--param", kvs, "key=value parameter override")->take_all();
    }

    CLI11_PARSE(app, argc, argv);

    try {
        Manifest m;
        if (!manifest_path.empty()) m = Manifest::from_json(read_json(manifest_path));
        m.kind = app.get_subcommands().front()->get_name();
        if (!out_override.empty()) m.out_dir = out_override;
        if (seed_given) {
            m.seed = seed_override;
            m.has_seed = true;
        }
        for (const std::string& kv : kvs) {
            auto eq = kv.find('=');
            if (eq == std::string::npos)
                fail(ErrorKind::ManifestError, "--param needs key=value");
            std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
            try {
                m.params[key] = std::stod(val);
            } catch (...) {
                m.params[key] = val;
            }
        }
        m.validate();
        return run_manifest(m);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
