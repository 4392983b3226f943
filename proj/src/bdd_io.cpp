#include "nnbdd/bdd_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "nnbdd/error.hpp"

namespace nnbdd {

namespace {

struct Header {
  std::size_t n = 0;
  std::uint64_t root = 0;
};

bool next_content_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) return true;
  }
  return false;
}

Header read_header(std::istream& in) {
  std::string line;
  if (!next_content_line(in, line)) throw ParseError("obdd: empty input");
  std::istringstream ss(line);
  std::string magic, n_field, root_field;
  ss >> magic >> n_field >> root_field;
  if (magic != "obdd" || n_field.rfind("n=", 0) != 0 || root_field.rfind("root=", 0) != 0) {
    throw ParseError("obdd: bad header '" + line + "'");
  }
  Header h;
  try {
    h.n = std::stoull(n_field.substr(2));
    h.root = std::stoull(root_field.substr(5));
  } catch (const std::exception&) {
    throw ParseError("obdd: bad header '" + line + "'");
  }
  return h;
}

NodeRef read_body(std::istream& in, Manager& mgr, const Header& h) {
  std::unordered_map<std::uint64_t, NodeRef> built{{0, mgr.bottom()}, {1, mgr.top()}};
  std::string line;
  std::size_t lineno = 1;
  while (next_content_line(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::uint64_t id = 0, var = 0, lo = 0, hi = 0;
    if (!(ss >> id >> var >> lo >> hi)) {
      throw ParseError("obdd: malformed node line " + std::to_string(lineno));
    }
    std::string rest;
    if (ss >> rest) throw ParseError("obdd: trailing data on line " + std::to_string(lineno));
    if (id < 2 || built.contains(id)) {
      throw ParseError("obdd: bad or duplicate node id on line " + std::to_string(lineno));
    }
    if (var >= h.n) throw ParseError("obdd: variable out of range on line " + std::to_string(lineno));
    auto lo_it = built.find(lo);
    auto hi_it = built.find(hi);
    if (lo_it == built.end() || hi_it == built.end()) {
      throw ParseError("obdd: child referenced before definition on line " + std::to_string(lineno));
    }
    const auto x = mgr.literal(VarId{static_cast<std::uint32_t>(var)});
    built.emplace(id, mgr.ite(x, hi_it->second, lo_it->second));
  }
  auto it = built.find(h.root);
  if (it == built.end()) throw ParseError("obdd: root " + std::to_string(h.root) + " not defined");
  return it->second;
}

}  // namespace

void write_obdd(std::ostream& out, const Manager& mgr, NodeRef root) {
  std::unordered_map<NodeRef, std::uint64_t> ids{{mgr.bottom(), 0}, {mgr.top(), 1}};
  std::vector<std::string> lines;
  // Explicit stack: post-order, low child first.
  std::vector<std::pair<NodeRef, bool>> stack{{root, false}};
  while (!stack.empty()) {
    auto [node, expanded] = stack.back();
    stack.pop_back();
    if (ids.contains(node)) continue;
    if (!expanded) {
      stack.push_back({node, true});
      stack.push_back({mgr.high(node), false});
      stack.push_back({mgr.low(node), false});
      continue;
    }
    const auto id = ids.size();
    ids.emplace(node, id);
    lines.push_back(std::to_string(id) + ' ' + std::to_string(mgr.var(node).index) + ' ' +
                    std::to_string(ids.at(mgr.low(node))) + ' ' + std::to_string(ids.at(mgr.high(node))));
  }
  out << "obdd n=" << mgr.num_vars() << " root=" << ids.at(root) << '\n';
  for (const auto& l : lines) out << l << '\n';
}

std::string to_obdd_text(const Manager& mgr, NodeRef root) {
  std::ostringstream ss;
  write_obdd(ss, mgr, root);
  return ss.str();
}

NodeRef read_obdd(std::istream& in, Manager& mgr) {
  const auto h = read_header(in);
  if (h.n != mgr.num_vars()) {
    throw ArgumentError("obdd: file has " + std::to_string(h.n) + " variables, manager has " +
                        std::to_string(mgr.num_vars()));
  }
  return read_body(in, mgr, h);
}

LoadedObdd load_obdd(std::istream& in) {
  const auto h = read_header(in);
  Manager mgr(h.n);
  const auto root = read_body(in, mgr, h);
  return {std::move(mgr), root};
}

LoadedObdd load_obdd_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return load_obdd(in);
}

void save_obdd_file(const std::string& path, const Manager& mgr, NodeRef root) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_obdd(out, mgr, root);
}

}  // namespace nnbdd
