#pragma once
// Machine-checkable certificates emitted by the selection procedures.  A
// certificate carries only claims that an independent checker can verify
// against the original instance: the selected levels, the selected subtrees,
// and the per-tree colors, plus enough context to know which checks apply.

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "levels.hpp"
#include "tree.hpp"

namespace qstree {

enum class CertKind { kg_extract, persist_respond, prehom, main };

inline const char* cert_kind_name(CertKind k) {
  switch (k) {
    case CertKind::kg_extract: return "kg-extract";
    case CertKind::persist_respond: return "persist-respond";
    case CertKind::prehom: return "prehom";
    case CertKind::main: return "main";
  }
  return "unknown";
}

struct Certificate {
  CertKind kind = CertKind::kg_extract;
  LevelSet X;                            // the instance's level set
  LevelSet levels;                       // selected sub-level-set
  std::map<BitString, FinTree> trees;    // selected subtree per instance tree
  std::map<BitString, int> colors;       // claimed color per instance tree
  int k = 1;                             // number of colors in play
  std::optional<Alpha> alpha_claim;      // largeness claimed for `levels`
  std::map<std::string, std::string> context;  // free-form exact context
};

}  // namespace qstree
