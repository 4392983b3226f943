#pragma once

#include <iosfwd>
#include <string>

#include "nnbdd/bdd.hpp"

namespace nnbdd {

/// Text form of a single-rooted diagram:
///
///     obdd n=<vars> root=<id>
///     <id> <var> <lo-id> <hi-id>
///     ...
///
/// Ids 0 and 1 are the FALSE and TRUE terminals. Decision nodes are numbered
/// from 2 in post-order (low child first), so children precede parents and
/// the output is deterministic.
void write_obdd(std::ostream& out, const Manager& mgr, NodeRef root);
std::string to_obdd_text(const Manager& mgr, NodeRef root);

/// Reads a diagram into an existing manager; its variable count must equal
/// the file's `n`. Node order in `mgr` may differ from the writer's.
NodeRef read_obdd(std::istream& in, Manager& mgr);

struct LoadedObdd {
  Manager manager;
  NodeRef root;
};

/// Reads a diagram into a fresh manager with declaration order.
LoadedObdd load_obdd(std::istream& in);
LoadedObdd load_obdd_file(const std::string& path);
void save_obdd_file(const std::string& path, const Manager& mgr, NodeRef root);

}  // namespace nnbdd
