#pragma once

#include <cmath>
#include <map>
#include <stdexcept>

#include "catbrw/lattice.hpp"

namespace catbrw {

// Real-valued measure with finite support on Z^d. Backed by an ordered map
// so iteration (and therefore serialisation) is deterministic.
class SparseMeasure {
 public:
  using Map = std::map<Site, double>;

  SparseMeasure() = default;

  double operator()(const Site& x) const {
    auto it = atoms_.find(x);
    return it == atoms_.end() ? 0.0 : it->second;
  }

  void add(const Site& x, double w) {
    if (w == 0.0) return;
    atoms_[x] += w;
  }

  void set(const Site& x, double w) { atoms_[x] = w; }

  double total_mass() const {
    double s = 0.0;
    for (const auto& [site, w] : atoms_) s += w;
    return s;
  }

  double min_value() const {
    double m = 0.0;
    for (const auto& [site, w] : atoms_)
      if (w < m) m = w;
    return m;
  }

  SparseMeasure normalized() const {
    double s = total_mass();
    if (s <= 0.0) throw std::runtime_error("SparseMeasure::normalized: nonpositive total mass");
    SparseMeasure out;
    for (const auto& [site, w] : atoms_) out.atoms_[site] = w / s;
    return out;
  }

  std::size_t support_size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }

  Map::const_iterator begin() const { return atoms_.begin(); }
  Map::const_iterator end() const { return atoms_.end(); }

  // Total variation distance, probabilists' convention: half the L1 norm.
  friend double tv_distance(const SparseMeasure& a, const SparseMeasure& b) {
    double l1 = 0.0;
    auto ia = a.atoms_.begin();
    auto ib = b.atoms_.begin();
    while (ia != a.atoms_.end() && ib != b.atoms_.end()) {
      if (ia->first < ib->first) {
        l1 += std::abs(ia->second);
        ++ia;
      } else if (ib->first < ia->first) {
        l1 += std::abs(ib->second);
        ++ib;
      } else {
        l1 += std::abs(ia->second - ib->second);
        ++ia;
        ++ib;
      }
    }
    for (; ia != a.atoms_.end(); ++ia) l1 += std::abs(ia->second);
    for (; ib != b.atoms_.end(); ++ib) l1 += std::abs(ib->second);
    return 0.5 * l1;
  }

 private:
  Map atoms_;
};

}  // namespace catbrw
