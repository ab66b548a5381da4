#include "catbrw/lattice.hpp"

#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace catbrw {

Neighbors neighbors(const Site& x, int dim) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("neighbors: dim out of range [1,6]");
  Neighbors out;
  out.count = 2 * dim;
  for (int i = 0; i < dim; ++i) {
    Site plus = x;
    plus[i] += 1;
    Site minus = x;
    minus[i] -= 1;
    out.sites[static_cast<std::size_t>(2 * i)] = plus;
    out.sites[static_cast<std::size_t>(2 * i + 1)] = minus;
  }
  return out;
}

std::string format_site(const Site& s, int dim) {
  std::string out;
  char buf[16];
  for (int i = 0; i < dim; ++i) {
    std::snprintf(buf, sizeof(buf), "%d", s[i]);
    if (i) out.push_back(',');
    out += buf;
  }
  return out;
}

Site parse_site(const std::string& text, int dim) {
  Site s;
  std::size_t pos = 0;
  for (int i = 0; i < dim; ++i) {
    if (pos >= text.size()) throw std::invalid_argument("parse_site: too few coordinates in '" + text + "'");
    std::size_t next = text.find(',', pos);
    std::string tok = text.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    std::size_t used = 0;
    long v = std::stol(tok, &used);
    if (used != tok.size() || tok.empty()) throw std::invalid_argument("parse_site: bad coordinate '" + tok + "'");
    s[i] = static_cast<std::int32_t>(v);
    pos = next == std::string::npos ? text.size() : next + 1;
  }
  if (pos != text.size()) throw std::invalid_argument("parse_site: too many coordinates in '" + text + "'");
  return s;
}

BoxIndex::BoxIndex(int dim, int radius) : dim_(dim), radius_(radius) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("BoxIndex: dim out of range [1,6]");
  if (radius < 0) throw std::invalid_argument("BoxIndex: radius must be nonnegative");
  side_ = 2 * static_cast<std::int64_t>(radius) + 1;
  size_ = 1;
  for (int i = 0; i < dim; ++i) {
    if (size_ > (std::int64_t{1} << 62) / side_) throw std::invalid_argument("BoxIndex: box too large");
    size_ *= side_;
  }
}

}  // namespace catbrw
