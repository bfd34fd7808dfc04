#ifndef ISOISING_MANIFEST_HPP
#define ISOISING_MANIFEST_HPP

#include <filesystem>
#include <functional>
#include <thread>

#include "isoising/experiments.hpp"
#include "isoising/serialize.hpp"

namespace isoising {

/// Experiment manifest: the manifest file is the source of truth, command
/// line flags override individual fields.
struct Manifest {
    std::string kind;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool has_seed = false;
    json params = json::object();

    static Manifest from_json(const json& j) {
        Manifest m;
        m.kind = j.at("kind").get<std::string>();
        if (j.contains("out_dir")) m.out_dir = j.at("out_dir").get<std::string>();
        if (j.contains("seed")) {
            m.seed = j.at("seed").get<std::uint64_t>();
            m.has_seed = true;
        }
        if (j.contains("params")) m.params = j.at("params");
        return m;
    }

    double param(const std::string& key, double dflt) const {
        return params.contains(key) ? params.at(key).get<double>() : dflt;
    }
    std::string param_str(const std::string& key, const std::string& dflt) const {
        return params.contains(key) ? params.at(key).get<std::string>() : dflt;
    }
    std::vector<int> param_ints(const std::string& key, std::vector<int> dflt) const {
        if (!params.contains(key)) return dflt;
        return params.at(key).get<std::vector<int>>();
    }

    void validate() const {
        static const char* kinds[] = {"lattice-gen", "fermion-exact", "fermion-bvp",
                                      "checks",      "converge-fk",   "converge-spin",
                                      "crossing",    "appendix-suite"};
        bool ok = false;
        for (const char* k : kinds) ok = ok || kind == k;
        if (!ok) fail(ErrorKind::ManifestError, "manifest: unknown kind '" + kind + "'");
        bool needs_seed = kind == "crossing" || (kind == "lattice-gen" &&
                                                 param_str("lattice", "square").find("random") !=
                                                     std::string::npos);
        if (needs_seed && !has_seed)
            fail(ErrorKind::ManifestError, "manifest: kind '" + kind + "' requires a seed");
    }
};

/// Atomic file drop: write then rename, so partial outputs never appear.
inline void write_atomic(const std::string& path, const std::string& text) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) fail(ErrorKind::BadInput, "write_atomic: cannot open " + tmp);
        out << text;
    }
    std::filesystem::rename(tmp, path);
}

/// Runs independent cells on up to ISO_ISING_THREADS workers.
inline void run_cells(std::vector<std::function<void()>> cells) {
    unsigned cap = std::thread::hardware_concurrency();
    if (const char* env = std::getenv("ISO_ISING_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) cap = static_cast<unsigned>(v);
    }
    cap = std::max(1u, std::min<unsigned>(cap, cells.size()));
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(cells.size());
    for (unsigned t = 0; t < cap; ++t)
        pool.emplace_back([&]() {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= cells.size()) return;
                try {
                    cells[i]();
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace isoising

#endif
