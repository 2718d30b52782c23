#pragma once

#include <cctype>
#include <string>
#include <string_view>

namespace nval {

// Canonical token form: lowercase, non-alphanumeric runs collapsed to a
// single hyphen, no leading/trailing hyphens.
// "Ethereum PoA (Clique)" -> "ethereum-poa-clique", "ARMv7" -> "armv7".
inline std::string normalize_token(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_sep = false;
  for (unsigned char c : raw) {
    if (std::isalnum(c)) {
      if (pending_sep && !out.empty()) out.push_back('-');
      pending_sep = false;
      out.push_back(static_cast<char>(std::tolower(c)));
    } else {
      pending_sep = true;
    }
  }
  return out;
}

// True when one token is a hyphen-boundary prefix of the other.
// "ethereum-poa" matches "ethereum-poa-clique" (and vice versa), but
// "poa" does not match "ethereum-poa" and "pow" never matches "power".
inline bool token_prefix_match(std::string_view a, std::string_view b) {
  if (a == b) return true;
  if (a.size() > b.size()) std::swap(a, b);
  return b.size() > a.size() && b.substr(0, a.size()) == a &&
         b[a.size()] == '-';
}

}  // namespace nval
