#include "common.hpp"

#include <algorithm>
#include <sstream>

namespace seqdmg {

std::string set_key(const VarSet& s) {
  std::string out;
  for (size_t k = 0; k < s.size(); ++k) {
    if (k) out += ',';
    out += std::to_string(s[k]);
  }
  return out;
}

std::string format_set(const VarSet& s) { return "{" + set_key(s) + "}"; }

VarSet parse_set_key(const std::string& key) {
  VarSet out;
  std::stringstream ss(key);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    auto b = tok.find_first_not_of(" \t");
    auto e = tok.find_last_not_of(" \t");
    if (b == std::string::npos) fail(ErrorKind::InvalidArgument, "empty element in set '" + key + "'");
    tok = tok.substr(b, e - b + 1);
    size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(tok, &used);
    } catch (const std::exception&) {
      fail(ErrorKind::InvalidArgument, "bad integer '" + tok + "' in set '" + key + "'");
    }
    if (used != tok.size()) fail(ErrorKind::InvalidArgument, "bad integer '" + tok + "' in set '" + key + "'");
    out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  if (std::adjacent_find(out.begin(), out.end()) != out.end())
    fail(ErrorKind::InvalidArgument, "duplicate element in set '" + key + "'");
  return out;
}

bool is_subset(const VarSet& inner, const VarSet& outer) {
  return std::includes(outer.begin(), outer.end(), inner.begin(), inner.end());
}

VarSet set_intersection(const VarSet& a, const VarSet& b) {
  VarSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

VarSet set_difference(const VarSet& a, const VarSet& b) {
  VarSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace seqdmg
