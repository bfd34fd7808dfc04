#ifndef ISOISING_FIELDS_HPP
#define ISOISING_FIELDS_HPP

#include <unordered_map>

#include "isoising/domain.hpp"

namespace isoising {

/// Values on lattice vertices, keyed by graph vertex id.  Supports black-only,
/// white-only or mixed supports; absent keys are "not in support".
template <class T>
class VertexField {
  public:
    VertexField() = default;
    explicit VertexField(const IsoradialGraph* g) : g_(g) {}

    bool has(int v) const { return vals_.count(v) != 0; }
    const T& at(int v) const {
        auto it = vals_.find(v);
        if (it == vals_.end()) fail(ErrorKind::MissingVertex, "VertexField: value missing");
        return it->second;
    }
    void set(int v, T x) { vals_[v] = x; }
    std::size_t size() const { return vals_.size(); }
    const std::unordered_map<int, T>& values() const { return vals_; }
    std::unordered_map<int, T>& values() { return vals_; }
    const IsoradialGraph* graph() const { return g_; }

  private:
    const IsoradialGraph* g_ = nullptr;
    std::unordered_map<int, T> vals_;
};

/// Complex values on rhombi centers, keyed by graph rhombus id.
template <class T>
class RhombusField {
  public:
    RhombusField() = default;
    explicit RhombusField(const IsoradialGraph* g) : g_(g) {}

    bool has(int z) const { return vals_.count(z) != 0; }
    const T& at(int z) const {
        auto it = vals_.find(z);
        if (it == vals_.end()) fail(ErrorKind::MissingFace, "RhombusField: value missing");
        return it->second;
    }
    void set(int z, T x) { vals_[z] = x; }
    std::size_t size() const { return vals_.size(); }
    const std::unordered_map<int, T>& values() const { return vals_; }
    const IsoradialGraph* graph() const { return g_; }

  private:
    const IsoradialGraph* g_ = nullptr;
    std::unordered_map<int, T> vals_;
};

/// Complex values on the faces of a discrete domain (inner rhombi and
/// boundary half-rhombi), indexed by domain face index.
class FaceField {
  public:
    FaceField() = default;
    explicit FaceField(const DiscreteDomain* dom)
        : dom_(dom), vals_(dom->faces.size(), cplx(0, 0)) {}

    cplx at(int f) const { return vals_[f]; }
    void set(int f, cplx x) { vals_[f] = x; }
    std::size_t size() const { return vals_.size(); }
    const DiscreteDomain* domain() const { return dom_; }

    double max_abs() const {
        double m = 0.0;
        for (cplx v : vals_) m = std::max(m, std::abs(v));
        return m;
    }

  private:
    const DiscreteDomain* dom_ = nullptr;
    std::vector<cplx> vals_;
};

}  // namespace isoising

#endif
