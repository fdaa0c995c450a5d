#pragma once
// Level sets (strictly increasing finite sets of naturals), stacks of sets,
// and the ordinal notations w^d.n used by the largeness arithmetic.

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "basics.hpp"

namespace qstree {

// A finite set of naturals, kept strictly increasing.
class LevelSet {
 public:
  LevelSet() = default;
  LevelSet(std::initializer_list<std::uint64_t> xs) : v_(xs) { validate(); }
  explicit LevelSet(std::vector<std::uint64_t> xs) : v_(std::move(xs)) { validate(); }

  static LevelSet unchecked(std::vector<std::uint64_t> xs) {
    LevelSet s;
    s.v_ = std::move(xs);
    return s;
  }

  const std::vector<std::uint64_t>& values() const { return v_; }
  std::size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }
  std::uint64_t operator[](std::size_t i) const { return v_[i]; }
  std::uint64_t min() const { return v_.front(); }
  std::uint64_t max() const { return v_.back(); }

  bool contains(std::uint64_t x) const {
    return std::binary_search(v_.begin(), v_.end(), x);
  }
  // Index of x; requires membership.
  std::size_t index_of(std::uint64_t x) const {
    auto it = std::lower_bound(v_.begin(), v_.end(), x);
    ensure(it != v_.end() && *it == x, "index_of on non-member");
    return static_cast<std::size_t>(it - v_.begin());
  }

  bool subset_of(const LevelSet& o) const {
    return std::includes(o.v_.begin(), o.v_.end(), v_.begin(), v_.end());
  }

  LevelSet slice(std::size_t from, std::size_t count) const {
    return unchecked({v_.begin() + from, v_.begin() + from + count});
  }
  LevelSet suffix(std::size_t from) const {
    return unchecked({v_.begin() + from, v_.end()});
  }
  // Members >= x.
  LevelSet tail_from(std::uint64_t x) const {
    auto it = std::lower_bound(v_.begin(), v_.end(), x);
    return unchecked({it, v_.end()});
  }

  LevelSet set_union(const LevelSet& o) const {
    std::vector<std::uint64_t> out;
    std::set_union(v_.begin(), v_.end(), o.v_.begin(), o.v_.end(), std::back_inserter(out));
    return unchecked(std::move(out));
  }

  bool operator==(const LevelSet&) const = default;

  std::string str() const {
    std::string s = "{";
    for (std::size_t i = 0; i < v_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(v_[i]);
    }
    return s + "}";
  }

 private:
  void validate() const {
    for (std::size_t i = 1; i < v_.size(); ++i)
      expect(v_[i - 1] < v_[i], Err::bad_input,
             "set must be strictly increasing: " + str());
  }
  std::vector<std::uint64_t> v_;
};

// Stack of sets: consecutive members strictly separated (max of one < min of next),
// all members nonempty.
using StackOfSets = std::vector<LevelSet>;

inline bool is_stack(const StackOfSets& st) {
  for (const auto& m : st)
    if (m.empty()) return false;
  for (std::size_t i = 1; i < st.size(); ++i)
    if (st[i - 1].max() >= st[i].min()) return false;
  return true;
}

inline void require_stack(const StackOfSets& st, const std::string& who) {
  expect(is_stack(st), Err::not_stack, who + ": members must form a stack");
}

inline LevelSet stack_union(const StackOfSets& st) {
  std::vector<std::uint64_t> out;
  for (const auto& m : st) out.insert(out.end(), m.values().begin(), m.values().end());
  return LevelSet::unchecked(std::move(out));
}

// Ordinal notation w^d.n with d >= 1, n >= 1.
struct Alpha {
  std::uint32_t d = 1;
  std::uint64_t n = 1;

  Alpha() = default;
  Alpha(std::uint32_t dd, std::uint64_t nn) : d(dd), n(nn) {
    expect(d >= 1 && n >= 1, Err::bad_input, "ordinal exponent and multiplier must be >= 1");
  }

  static Alpha omega() { return Alpha(1, 1); }

  bool operator==(const Alpha&) const = default;

  std::string str() const {
    std::string s = "w^" + std::to_string(d);
    if (n != 1) s += "." + std::to_string(n);
    return s;
  }

  // Accepts "w", "w^d", "w.n", "w^d.n".
  static Alpha parse(const std::string& text) {
    expect(!text.empty() && text[0] == 'w', Err::bad_input,
           "ordinal must look like w^d.n: \"" + text + "\"");
    std::size_t pos = 1;
    std::uint64_t d = 1, n = 1;
    auto read_num = [&](const char* what) {
      expect(pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])),
             Err::bad_input, std::string("ordinal: expected ") + what + " in \"" + text + "\"");
      std::uint64_t v = 0;
      while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
        v = v * 10 + static_cast<std::uint64_t>(text[pos] - '0');
        expect(v <= (std::uint64_t{1} << 62), Err::bad_input, "ordinal component too large");
        ++pos;
      }
      return v;
    };
    if (pos < text.size() && text[pos] == '^') {
      ++pos;
      d = read_num("exponent");
    }
    if (pos < text.size() && text[pos] == '.') {
      ++pos;
      n = read_num("multiplier");
    }
    expect(pos == text.size(), Err::bad_input, "trailing characters in ordinal \"" + text + "\"");
    expect(d >= 1 && d <= 0xffffffffull, Err::bad_input, "ordinal exponent out of range");
    return Alpha(static_cast<std::uint32_t>(d), n);
  }
};

}  // namespace qstree
