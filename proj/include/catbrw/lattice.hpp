#pragma once

#include <array>
#include <cstdint>
#include <cstddef>
#include <functional>
#include <string>

namespace catbrw {

// Dimensions 1..6 are supported at runtime; coordinates live in a fixed
// array so that sites stay trivially copyable (no heap traffic in the
// simulator hot loop). Unused coordinates are kept at zero, which makes
// equality and hashing plain coordinate-wise comparisons.
inline constexpr int kMaxDim = 6;

struct Site {
  std::array<std::int32_t, kMaxDim> c{};

  static Site origin() { return Site{}; }

  std::int32_t operator[](int i) const { return c[static_cast<std::size_t>(i)]; }
  std::int32_t& operator[](int i) { return c[static_cast<std::size_t>(i)]; }

  friend bool operator==(const Site& a, const Site& b) { return a.c == b.c; }
  friend bool operator!=(const Site& a, const Site& b) { return a.c != b.c; }
  friend bool operator<(const Site& a, const Site& b) { return a.c < b.c; }
};

struct SiteHash {
  std::size_t operator()(const Site& s) const noexcept {
    // FNV-1a over the six coordinates
    std::uint64_t h = 1469598103934665603ull;
    for (std::int32_t v : s.c) {
      h ^= static_cast<std::uint32_t>(v);
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

inline int norm_l1(const Site& s) {
  int n = 0;
  for (std::int32_t v : s.c) n += v < 0 ? -v : v;
  return n;
}

inline int norm_linf(const Site& s) {
  int n = 0;
  for (std::int32_t v : s.c) {
    int a = v < 0 ? -v : v;
    if (a > n) n = a;
  }
  return n;
}

inline bool is_origin(const Site& s) {
  for (std::int32_t v : s.c)
    if (v != 0) return false;
  return true;
}

// The 2d nearest neighbours of x, in the fixed order
// x+e1, x-e1, x+e2, x-e2, ...  The order is part of the artifact contract:
// seeded runs are bit-reproducible because neighbour k of a site is always
// the same site.
struct Neighbors {
  std::array<Site, 2 * kMaxDim> sites;
  int count = 0;

  const Site* begin() const { return sites.data(); }
  const Site* end() const { return sites.data() + count; }
};

Neighbors neighbors(const Site& x, int dim);

// Offset x by +1/-1 along axis; direction in [0, 2*dim) with the same
// ordering as neighbors().
inline Site step(const Site& x, int direction) {
  Site y = x;
  int axis = direction >> 1;
  y[axis] += (direction & 1) ? -1 : +1;
  return y;
}

// Serialisation used by every CSV/JSON surface: comma-separated integers,
// e.g. "1,-2,0" for d=3.
std::string format_site(const Site& s, int dim);
Site parse_site(const std::string& text, int dim);

// Bijective indexing of the L-infinity box {x : |x|_inf <= radius}.
// encode(decode(i)) == i on [0, size()); the origin maps to (size()-1)/2
// (the exact centre), which is fixed and documented here.
class BoxIndex {
 public:
  BoxIndex(int dim, int radius);

  int dim() const { return dim_; }
  int radius() const { return radius_; }
  std::int64_t size() const { return size_; }
  std::int64_t origin_index() const { return (size_ - 1) / 2; }

  bool contains(const Site& s) const { return norm_linf(s) <= radius_; }

  std::int64_t encode(const Site& s) const {
    // mixed-radix little-endian: coordinate i contributes (x_i+R)*(2R+1)^i
    std::int64_t idx = 0;
    std::int64_t stride = 1;
    for (int i = 0; i < dim_; ++i) {
      idx += (static_cast<std::int64_t>(s[i]) + radius_) * stride;
      stride *= side_;
    }
    return idx;
  }

  Site decode(std::int64_t idx) const {
    Site s;
    for (int i = 0; i < dim_; ++i) {
      s[i] = static_cast<std::int32_t>(idx % side_) - radius_;
      idx /= side_;
    }
    return s;
  }

 private:
  int dim_;
  int radius_;
  std::int64_t side_;
  std::int64_t size_;
};

}  // namespace catbrw
