#include "ldla/site.hpp"

#include <algorithm>
#include <stdexcept>

namespace ldla {

std::string to_string(Site x) {
  if (x == 0) return "0";
  bool negative = x < 0;
  // Work with the unsigned magnitude so that the most negative value is fine.
  unsigned __int128 u = negative ? static_cast<unsigned __int128>(0) - static_cast<unsigned __int128>(x)
                                 : static_cast<unsigned __int128>(x);
  std::string digits;
  while (u > 0) {
    digits.push_back(static_cast<char>('0' + static_cast<int>(u % 10)));
    u /= 10;
  }
  if (negative) digits.push_back('-');
  std::reverse(digits.begin(), digits.end());
  return digits;
}

Site parse_site(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("empty integer");
  std::size_t pos = 0;
  bool negative = false;
  if (text[0] == '-' || text[0] == '+') {
    negative = text[0] == '-';
    pos = 1;
  }
  if (pos == text.size()) throw std::invalid_argument("missing digits in '" + std::string(text) + "'");
  constexpr unsigned __int128 limit = (static_cast<unsigned __int128>(1) << 126);
  unsigned __int128 value = 0;
  for (; pos < text.size(); ++pos) {
    char c = text[pos];
    if (c < '0' || c > '9') throw std::invalid_argument("bad integer '" + std::string(text) + "'");
    value = value * 10 + static_cast<unsigned>(c - '0');
    if (value > limit) throw std::invalid_argument("integer out of range '" + std::string(text) + "'");
  }
  Site s = static_cast<Site>(value);
  return negative ? -s : s;
}

}  // namespace ldla
