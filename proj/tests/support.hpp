#pragma once

// Hand-built sequents for fixtures.

#include <initializer_list>
#include <memory>
#include <string>
#include <utility>

#include "is4/sequent.hpp"

namespace is4::testing {

using Atoms = std::initializer_list<std::pair<LabelId, LabelId>>;
using Formulas = std::initializer_list<std::pair<LabelId, const char*>>;

/// Labels 0..n-1 over the subformulas of `root`. Left formulas are added
/// raw, so fixtures may break mon-left on purpose.
inline Sequent build(const char* root, std::size_t n, Atoms r, Atoms le, Formulas left = {}, Formulas right = {}) {
  auto table = std::make_shared<const Subformulas>(parse(root));
  Sequent g(table);
  for (std::size_t i = 0; i < n; ++i) g.add_label(LabelMeta{});
  auto idx = [&](const char* f) {
    const int i = table->index_of(parse(f));
    if (i < 0) throw std::invalid_argument(std::string("not a subformula: ") + f);
    return static_cast<std::size_t>(i);
  };
  for (auto [x, y] : r) g.add_r(g.at(x), g.at(y));
  for (auto [x, y] : le) g.add_le(g.at(x), g.at(y));
  for (auto [x, f] : left) g.add_left_raw(g.at(x), idx(f));
  for (auto [x, f] : right) g.add_right(g.at(x), idx(f));
  return g;
}

inline std::size_t fidx(const Sequent& g, const char* f) {
  const int i = g.table().index_of(parse(f));
  if (i < 0) throw std::invalid_argument(std::string("not a subformula: ") + f);
  return static_cast<std::size_t>(i);
}

inline const char* const kProv = "box (dia ((c -> dia b) -> bot) & dia b) -> bot";
inline const char* const kCm = "box ((box a -> bot) & ((a -> bot) -> bot)) -> bot";
inline const char* const kPeirce = "((a -> b) -> a) -> a";

}  // namespace is4::testing
