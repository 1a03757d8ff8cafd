#include "pocketgen/smiles.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "pocketgen/rng.hpp"

namespace pocketgen::smiles {

namespace {

constexpr std::array<std::string_view, 118> kElements = {
    "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg",
    "Al", "Si", "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr",
    "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr",
    "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd",
    "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd",
    "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf",
    "Ta", "W",  "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po",
    "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U",  "Np", "Pu", "Am", "Cm",
    "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs",
    "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og"};

constexpr std::string_view kSymbolChars = "()=#-+\\/:~@?>*$.";

bool is_organic(std::string_view element) {
  return element == "B" || element == "C" || element == "N" ||
         element == "O" || element == "P" || element == "S" ||
         element == "F" || element == "Cl" || element == "Br" ||
         element == "I";
}

bool aromatic_capable(std::string_view element) {
  return element == "B" || element == "C" || element == "N" ||
         element == "O" || element == "P" || element == "S" ||
         element == "Se" || element == "As";
}

std::string capitalize(std::string_view lower) {
  std::string s(lower);
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(s[0]));
  return s;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(c));
  return out;
}

BondOrder implicit_order(const Atom& a, const Atom& b) {
  return (a.aromatic && b.aromatic) ? BondOrder::Aromatic : BondOrder::Single;
}

std::string bond_text(BondOrder order, const Atom& a, const Atom& b) {
  switch (order) {
    case BondOrder::Single:
      return (a.aromatic && b.aromatic) ? "-" : "";
    case BondOrder::Aromatic:
      return (a.aromatic && b.aromatic) ? "" : ":";
    case BondOrder::Double:
      return "=";
    case BondOrder::Triple:
      return "#";
  }
  return "";
}

// Parses the inside of a bracket expression. `pos` is the offset of '['.
Atom parse_bracket(std::string_view text, std::size_t pos) {
  std::string_view in = text.substr(1, text.size() - 2);
  std::size_t i = 0;
  auto fail = [&](SmilesError::Kind k, const std::string& msg) {
    return SmilesError(k, pos + 1 + i, msg);
  };
  if (in.empty()) throw fail(SmilesError::Kind::Syntax, "empty bracket atom");
  if (std::isdigit(static_cast<unsigned char>(in[0])))
    throw fail(SmilesError::Kind::UnsupportedFeature, "isotopes are not supported");

  Atom atom;
  if (std::islower(static_cast<unsigned char>(in[0]))) {
    // Aromatic symbols: two-letter forms first.
    if (in.size() >= 2 && (in.substr(0, 2) == "se" || in.substr(0, 2) == "as")) {
      atom.element = capitalize(in.substr(0, 2));
      i = 2;
    } else if (std::string_view("bcnops").find(in[0]) != std::string_view::npos) {
      atom.element = capitalize(in.substr(0, 1));
      i = 1;
    } else {
      throw fail(SmilesError::Kind::Syntax, "unknown aromatic symbol");
    }
    atom.aromatic = true;
  } else if (std::isupper(static_cast<unsigned char>(in[0]))) {
    if (in.size() >= 2 && std::islower(static_cast<unsigned char>(in[1])) &&
        is_element_symbol(in.substr(0, 2))) {
      atom.element = std::string(in.substr(0, 2));
      i = 2;
    } else if (is_element_symbol(in.substr(0, 1))) {
      atom.element = std::string(in.substr(0, 1));
      i = 1;
    } else {
      throw fail(SmilesError::Kind::Syntax, "unknown element");
    }
  } else {
    throw fail(SmilesError::Kind::Syntax, "bracket atom must start with a symbol");
  }

  if (i < in.size() && in[i] == '@')
    throw fail(SmilesError::Kind::UnsupportedFeature, "chirality is not supported");

  int h = 0;
  if (i < in.size() && in[i] == 'H') {
    ++i;
    h = 1;
    if (i < in.size() && std::isdigit(static_cast<unsigned char>(in[i]))) {
      h = in[i] - '0';
      ++i;
    }
  }
  atom.h_count = h;

  if (i < in.size() && (in[i] == '+' || in[i] == '-')) {
    const char sign = in[i];
    const int s = sign == '+' ? 1 : -1;
    ++i;
    int magnitude = 1;
    if (i < in.size() && std::isdigit(static_cast<unsigned char>(in[i]))) {
      magnitude = 0;
      while (i < in.size() && std::isdigit(static_cast<unsigned char>(in[i]))) {
        magnitude = magnitude * 10 + (in[i] - '0');
        ++i;
      }
    } else {
      while (i < in.size() && in[i] == sign) {
        ++magnitude;
        ++i;
      }
    }
    atom.charge = s * magnitude;
  }

  if (i < in.size() && in[i] == ':')
    throw fail(SmilesError::Kind::UnsupportedFeature, "atom classes are not supported");
  if (i != in.size())
    throw fail(SmilesError::Kind::Syntax, "unexpected characters in bracket atom");
  return atom;
}

Atom parse_organic(std::string_view text) {
  Atom atom;
  if (std::islower(static_cast<unsigned char>(text[0]))) {
    atom.element = capitalize(text);
    atom.aromatic = true;
  } else {
    atom.element = std::string(text);
  }
  return atom;
}

int ring_number(std::string_view text) {
  if (text[0] == '%') return (text[1] - '0') * 10 + (text[2] - '0');
  return text[0] - '0';
}

std::string ring_text(int number) {
  if (number < 10) return std::string(1, static_cast<char>('0' + number));
  std::string s = "%";
  s += static_cast<char>('0' + number / 10);
  s += static_cast<char>('0' + number % 10);
  return s;
}

std::string atom_text(const Atom& atom) {
  if (!atom.h_count && atom.charge == 0 && is_organic(atom.element) &&
      (!atom.aromatic || aromatic_capable(atom.element)) &&
      (!atom.aromatic || atom.element.size() == 1)) {
    return atom.aromatic ? lowercase(atom.element) : atom.element;
  }
  std::string s = "[";
  s += atom.aromatic ? lowercase(atom.element) : atom.element;
  const int h = atom.h_count.value_or(0);
  if (h > 0) {
    s += 'H';
    if (h > 1) s += std::to_string(h);
  }
  if (atom.charge != 0) {
    s += atom.charge > 0 ? '+' : '-';
    const int m = std::abs(atom.charge);
    if (m > 1) s += std::to_string(m);
  }
  s += ']';
  return s;
}

class Writer {
 public:
  Writer(const MolGraph& g, std::vector<std::vector<std::pair<int, int>>> adj)
      : g_(g), adj_(std::move(adj)) {}

  WrittenSmiles run(int start) {
    const int n = static_cast<int>(g_.atoms.size());
    visit_index_.assign(n, -1);
    children_.assign(n, {});
    ring_edges_.assign(n, {});
    tree_edge_.assign(g_.bonds.size(), false);
    build(start, -1);
    for (int v = 0; v < n; ++v) {
      if (visit_index_[v] < 0)
        throw DataError("cannot write SMILES for a disconnected graph");
    }
    for (std::size_t b = 0; b < g_.bonds.size(); ++b) {
      if (tree_edge_[b]) continue;
      ring_edges_[g_.bonds[b].a].push_back(static_cast<int>(b));
      ring_edges_[g_.bonds[b].b].push_back(static_cast<int>(b));
    }
    emit(start);
    return {out_, order_};
  }

 private:
  void build(int v, int parent_bond) {
    visit_index_[v] = counter_++;
    for (const auto& [nb, bond] : adj_[v]) {
      if (bond == parent_bond) continue;
      if (visit_index_[nb] < 0) {
        tree_edge_[bond] = true;
        children_[v].push_back({nb, bond});
        build(nb, bond);
      }
    }
  }

  void emit(int v) {
    out_ += atom_text(g_.atoms[v]);
    order_.push_back(v);

    // Closings first, then openings ordered by partner visit time. Numbers
    // for openings are picked before closings release theirs.
    std::vector<int> closing;
    std::vector<int> opening;
    for (int bond : ring_edges_[v]) {
      const Bond& b = g_.bonds[bond];
      const int other = b.a == v ? b.b : b.a;
      if (visit_index_[other] < visit_index_[v]) {
        closing.push_back(bond);
      } else {
        opening.push_back(bond);
      }
    }
    auto by_partner = [&](int x, int y) {
      auto partner = [&](int bond) {
        const Bond& b = g_.bonds[bond];
        return visit_index_[b.a == v ? b.b : b.a];
      };
      return partner(x) < partner(y);
    };
    std::sort(closing.begin(), closing.end(), by_partner);
    std::sort(opening.begin(), opening.end(), by_partner);

    std::vector<std::pair<int, int>> opened;
    for (int bond : opening) {
      const int num = lowest_free();
      in_use_.insert(num);
      opened.push_back({bond, num});
    }
    for (int bond : closing) {
      const int num = ring_of_bond_.at(bond);
      out_ += ring_text(num);
      in_use_.erase(num);
      ring_of_bond_.erase(bond);
    }
    for (const auto& [bond, num] : opened) {
      const Bond& b = g_.bonds[bond];
      out_ += bond_text(b.order, g_.atoms[b.a], g_.atoms[b.b]);
      out_ += ring_text(num);
      ring_of_bond_[bond] = num;
    }

    const auto& kids = children_[v];
    for (std::size_t k = 0; k < kids.size(); ++k) {
      const auto [child, bond] = kids[k];
      const Bond& b = g_.bonds[bond];
      const bool branch = k + 1 < kids.size();
      if (branch) out_ += '(';
      out_ += bond_text(b.order, g_.atoms[b.a], g_.atoms[b.b]);
      emit(child);
      if (branch) out_ += ')';
    }
  }

  int lowest_free() const {
    for (int k = 1; k < 100; ++k) {
      if (!in_use_.count(k)) return k;
    }
    throw DataError("more than 99 simultaneous ring closures");
  }

  const MolGraph& g_;
  std::vector<std::vector<std::pair<int, int>>> adj_;
  std::vector<int> visit_index_;
  std::vector<std::vector<std::pair<int, int>>> children_;
  std::vector<std::vector<int>> ring_edges_;
  std::vector<bool> tree_edge_;
  std::set<int> in_use_;
  std::map<int, int> ring_of_bond_;
  int counter_ = 0;
  std::string out_;
  std::vector<int> order_;
};

}  // namespace

SmilesError::SmilesError(Kind kind, std::size_t position,
                         const std::string& detail, int ring)
    : DataError("SMILES error at " + std::to_string(position) + ": " + detail),
      kind_(kind),
      position_(position),
      ring_(ring) {}

bool is_element_symbol(std::string_view symbol) {
  return std::find(kElements.begin(), kElements.end(), symbol) !=
         kElements.end();
}

std::vector<std::vector<std::pair<int, int>>> MolGraph::adjacency() const {
  std::vector<std::vector<std::pair<int, int>>> adj(atoms.size());
  for (std::size_t i = 0; i < bonds.size(); ++i) {
    adj[bonds[i].a].push_back({bonds[i].b, static_cast<int>(i)});
    adj[bonds[i].b].push_back({bonds[i].a, static_cast<int>(i)});
  }
  for (auto& row : adj) std::sort(row.begin(), row.end());
  return adj;
}

std::string MolGraph::check() const {
  const int n = static_cast<int>(atoms.size());
  if (n == 0) return "graph has no atoms";
  std::set<std::pair<int, int>> seen;
  for (const auto& b : bonds) {
    if (b.a < 0 || b.b < 0 || b.a >= n || b.b >= n) return "bond endpoint out of range";
    if (b.a == b.b) return "bond endpoints must differ";
    if (!seen.insert(std::minmax(b.a, b.b)).second) return "duplicate bond";
  }
  const auto adj = adjacency();
  std::vector<bool> reached(n, false);
  std::vector<int> stack{0};
  reached[0] = true;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (const auto& [nb, bond] : adj[v]) {
      if (!reached[nb]) {
        reached[nb] = true;
        stack.push_back(nb);
      }
    }
  }
  if (std::find(reached.begin(), reached.end(), false) != reached.end())
    return "graph is not connected";
  return {};
}

std::vector<Token> tokenize(std::string_view smiles) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < smiles.size()) {
    const char c = smiles[i];
    if (c == '[') {
      std::size_t j = i + 1;
      while (j < smiles.size() && smiles[j] != ']' && smiles[j] != '[') ++j;
      if (j >= smiles.size() || smiles[j] != ']')
        throw SmilesError(SmilesError::Kind::UnbalancedBracket, i, "unclosed '['");
      tokens.push_back({std::string(smiles.substr(i, j - i + 1)), TokenKind::Atom});
      i = j + 1;
    } else if (c == ']') {
      throw SmilesError(SmilesError::Kind::UnbalancedBracket, i, "unmatched ']'");
    } else if (c == 'B' || c == 'C') {
      const char second = c == 'B' ? 'r' : 'l';
      if (i + 1 < smiles.size() && smiles[i + 1] == second) {
        tokens.push_back({std::string(smiles.substr(i, 2)), TokenKind::Atom});
        i += 2;
      } else {
        tokens.push_back({std::string(1, c), TokenKind::Atom});
        ++i;
      }
    } else if (std::string_view("NOSPFIbcnosp").find(c) != std::string_view::npos) {
      tokens.push_back({std::string(1, c), TokenKind::Atom});
      ++i;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      tokens.push_back({std::string(1, c), TokenKind::RingDigit});
      ++i;
    } else if (c == '%') {
      if (i + 2 < smiles.size() &&
          std::isdigit(static_cast<unsigned char>(smiles[i + 1])) &&
          std::isdigit(static_cast<unsigned char>(smiles[i + 2]))) {
        tokens.push_back({std::string(smiles.substr(i, 3)), TokenKind::RingDigit});
        i += 3;
      } else {
        throw SmilesError(SmilesError::Kind::IllegalCharacter, i,
                          "'%' must be followed by two digits");
      }
    } else if (kSymbolChars.find(c) != std::string_view::npos) {
      tokens.push_back({std::string(1, c), TokenKind::Symbol});
      ++i;
    } else {
      throw SmilesError(SmilesError::Kind::IllegalCharacter, i,
                        std::string("illegal character '") + c + "'");
    }
  }
  return tokens;
}

std::string detokenize(std::span<const Token> tokens) {
  std::string s;
  for (const auto& t : tokens) s += t.text;
  return s;
}

std::size_t count_atom_tokens(std::span<const Token> tokens) {
  return static_cast<std::size_t>(
      std::count_if(tokens.begin(), tokens.end(),
                    [](const Token& t) { return t.kind == TokenKind::Atom; }));
}

std::size_t count_atom_tokens(std::string_view smiles) {
  return count_atom_tokens(tokenize(smiles));
}

std::string token_element(const Token& token) {
  if (token.kind != TokenKind::Atom) return {};
  std::string_view t = token.text;
  if (t[0] != '[') return capitalize(t);
  std::size_t i = 1;
  while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i;
  if (i >= t.size() - 1) return {};
  if (std::islower(static_cast<unsigned char>(t[i]))) {
    if (t.substr(i, 2) == "se" || t.substr(i, 2) == "as")
      return capitalize(t.substr(i, 2));
    return capitalize(t.substr(i, 1));
  }
  if (i + 1 < t.size() && std::islower(static_cast<unsigned char>(t[i + 1])) &&
      is_element_symbol(t.substr(i, 2)))
    return std::string(t.substr(i, 2));
  return std::string(t.substr(i, 1));
}

MolGraph parse(std::string_view smiles) {
  const auto tokens = tokenize(smiles);
  MolGraph g;
  struct OpenRing {
    int atom;
    std::optional<BondOrder> order;
    std::size_t position;
  };
  struct BranchFrame {
    int prev;
    std::size_t position;
    bool has_atom;
  };
  std::map<int, OpenRing> rings;
  std::vector<BranchFrame> branches;
  std::set<std::pair<int, int>> bonded;
  int prev = -1;
  std::optional<BondOrder> pending;
  std::size_t pos = 0;

  auto add_bond = [&](int a, int b, BondOrder order, std::size_t at) {
    if (a == b)
      throw SmilesError(SmilesError::Kind::ValenceConflict, at, "atom bonded to itself");
    if (!bonded.insert(std::minmax(a, b)).second)
      throw SmilesError(SmilesError::Kind::ValenceConflict, at, "duplicate bond");
    g.bonds.push_back({a, b, order});
  };

  for (const auto& tok : tokens) {
    switch (tok.kind) {
      case TokenKind::Atom: {
        Atom atom = tok.text[0] == '[' ? parse_bracket(tok.text, pos)
                                       : parse_organic(tok.text);
        g.atoms.push_back(std::move(atom));
        const int idx = static_cast<int>(g.atoms.size()) - 1;
        if (prev >= 0) {
          add_bond(prev, idx,
                   pending.value_or(implicit_order(g.atoms[prev], g.atoms[idx])),
                   pos);
        } else if (pending) {
          throw SmilesError(SmilesError::Kind::ValenceConflict, pos,
                            "bond symbol without a preceding atom");
        }
        if (!branches.empty()) branches.back().has_atom = true;
        pending.reset();
        prev = idx;
        break;
      }
      case TokenKind::RingDigit: {
        if (prev < 0)
          throw SmilesError(SmilesError::Kind::Syntax, pos,
                            "ring closure without a preceding atom");
        const int num = ring_number(tok.text);
        auto it = rings.find(num);
        if (it == rings.end()) {
          rings[num] = {prev, pending, pos};
        } else {
          const OpenRing open = it->second;
          rings.erase(it);
          if (open.order && pending && *open.order != *pending)
            throw SmilesError(SmilesError::Kind::ValenceConflict, pos,
                              "conflicting ring-closure bond orders");
          const auto order = pending ? pending : open.order;
          add_bond(open.atom, prev,
                   order.value_or(implicit_order(g.atoms[open.atom], g.atoms[prev])),
                   pos);
        }
        pending.reset();
        break;
      }
      case TokenKind::Symbol: {
        const char c = tok.text[0];
        if (c == '(') {
          if (prev < 0)
            throw SmilesError(SmilesError::Kind::Syntax, pos,
                              "branch without a preceding atom");
          if (pending)
            throw SmilesError(SmilesError::Kind::ValenceConflict, pos,
                              "bond symbol before a branch");
          branches.push_back({prev, pos, false});
        } else if (c == ')') {
          if (branches.empty())
            throw SmilesError(SmilesError::Kind::UnclosedBranch, pos,
                              "unmatched ')'");
          if (pending)
            throw SmilesError(SmilesError::Kind::ValenceConflict, pos,
                              "dangling bond at branch end");
          if (!branches.back().has_atom)
            throw SmilesError(SmilesError::Kind::Syntax, pos, "empty branch");
          prev = branches.back().prev;
          branches.pop_back();
        } else if (c == '-' || c == '=' || c == '#' || c == ':') {
          if (pending)
            throw SmilesError(SmilesError::Kind::ValenceConflict, pos,
                              "two bond symbols in a row");
          if (prev < 0)
            throw SmilesError(SmilesError::Kind::ValenceConflict, pos,
                              "bond symbol without a preceding atom");
          pending = c == '-'   ? BondOrder::Single
                    : c == '=' ? BondOrder::Double
                    : c == '#' ? BondOrder::Triple
                               : BondOrder::Aromatic;
        } else {
          throw SmilesError(SmilesError::Kind::UnsupportedFeature, pos,
                            std::string("unsupported symbol '") + c + "'");
        }
        break;
      }
    }
    pos += tok.text.size();
  }

  if (g.atoms.empty())
    throw SmilesError(SmilesError::Kind::Empty, 0, "no atoms");
  if (!rings.empty()) {
    const auto& [num, open] = *rings.begin();
    throw SmilesError(SmilesError::Kind::UnclosedRing, open.position,
                      "unclosed ring " + std::to_string(num), num);
  }
  if (!branches.empty())
    throw SmilesError(SmilesError::Kind::UnclosedBranch,
                      branches.back().position, "unclosed '('");
  if (pending)
    throw SmilesError(SmilesError::Kind::ValenceConflict, smiles.size(),
                      "dangling bond at end");
  return g;
}

WrittenSmiles write_smiles(const MolGraph& graph) {
  if (graph.atoms.empty()) return {};
  Writer w(graph, graph.adjacency());
  return w.run(0);
}

WrittenSmiles write_random_smiles(const MolGraph& graph, std::uint64_t seed) {
  if (graph.atoms.empty()) return {};
  Rng rng(seed);
  auto adj = graph.adjacency();
  const int start = static_cast<int>(rng.uniform_int(graph.atoms.size()));
  for (auto& row : adj) {
    for (std::size_t i = row.size(); i > 1; --i) {
      const auto j = rng.uniform_int(i);
      std::swap(row[i - 1], row[j]);
    }
  }
  Writer w(graph, std::move(adj));
  return w.run(start);
}

namespace {

using Ranks = std::vector<int>;

// Replaces arbitrary sortable keys by dense ranks 0..k-1.
template <typename Key>
Ranks densify(const std::vector<Key>& keys) {
  std::vector<Key> sorted = keys;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  Ranks r(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    r[i] = static_cast<int>(
        std::lower_bound(sorted.begin(), sorted.end(), keys[i]) - sorted.begin());
  }
  return r;
}

int class_count(const Ranks& r) {
  return r.empty() ? 0 : *std::max_element(r.begin(), r.end()) + 1;
}

class Canonicalizer {
 public:
  explicit Canonicalizer(const MolGraph& g) : g_(g), adj_(g.adjacency()) {}

  std::string run() {
    const std::size_t n = g_.atoms.size();
    using Init = std::tuple<std::string, bool, int, int, int, std::vector<int>>;
    std::vector<Init> init(n);
    for (std::size_t a = 0; a < n; ++a) {
      const Atom& at = g_.atoms[a];
      std::vector<int> orders;
      for (const auto& [nb, bond] : adj_[a])
        orders.push_back(static_cast<int>(g_.bonds[bond].order));
      std::sort(orders.begin(), orders.end());
      init[a] = {at.element, at.aromatic, at.charge, at.h_count.value_or(-1),
                 static_cast<int>(adj_[a].size()), orders};
    }
    labels_.resize(n);
    for (std::size_t a = 0; a < n; ++a) {
      const Atom& at = g_.atoms[a];
      labels_[a] = at.element + (at.aromatic ? "~" : "") + "," +
                   std::to_string(at.charge) + "," +
                   std::to_string(at.h_count.value_or(-1));
    }
    search(refine(densify(init)));
    return best_;
  }

 private:
  Ranks refine(Ranks r) const {
    const std::size_t n = r.size();
    int classes = class_count(r);
    while (true) {
      using Key = std::pair<int, std::vector<std::pair<int, int>>>;
      std::vector<Key> keys(n);
      for (std::size_t a = 0; a < n; ++a) {
        std::vector<std::pair<int, int>> env;
        for (const auto& [nb, bond] : adj_[a])
          env.push_back({r[nb], static_cast<int>(g_.bonds[bond].order)});
        std::sort(env.begin(), env.end());
        keys[a] = {r[a], std::move(env)};
      }
      Ranks next = densify(keys);
      const int next_classes = class_count(next);
      r = std::move(next);
      if (next_classes == classes) break;
      classes = next_classes;
    }
    return r;
  }

  std::string certificate(const Ranks& r) const {
    const std::size_t n = r.size();
    std::vector<int> atom_at(n);
    for (std::size_t a = 0; a < n; ++a) atom_at[r[a]] = static_cast<int>(a);
    std::string s;
    for (std::size_t k = 0; k < n; ++k) {
      s += labels_[atom_at[k]];
      s += ';';
    }
    std::vector<std::tuple<int, int, int>> bonds;
    for (const auto& b : g_.bonds) {
      const auto [lo, hi] = std::minmax(r[b.a], r[b.b]);
      bonds.push_back({lo, hi, static_cast<int>(b.order)});
    }
    std::sort(bonds.begin(), bonds.end());
    s += '|';
    for (const auto& [lo, hi, order] : bonds) {
      s += std::to_string(lo) + "-" + std::to_string(hi) + ":" +
           std::to_string(order) + ";";
    }
    return s;
  }

  void search(const Ranks& r) {
    const std::size_t n = r.size();
    if (class_count(r) == static_cast<int>(n)) {
      std::string cert = certificate(r);
      if (best_.empty() || cert < best_) best_ = std::move(cert);
      return;
    }
    // First (lowest-ranked) non-singleton cell.
    std::vector<int> counts(class_count(r), 0);
    for (int x : r) ++counts[x];
    int target = 0;
    while (counts[target] < 2) ++target;
    std::vector<int> cell;
    for (std::size_t a = 0; a < n; ++a)
      if (r[a] == target) cell.push_back(static_cast<int>(a));

    // Terminal atoms of one cell hanging off the same neighbor by the same
    // bond are interchangeable; exploring one of them suffices.
    bool interchangeable = true;
    for (int a : cell) {
      if (adj_[a].size() != 1 || adj_[a][0].first != adj_[cell[0]][0].first ||
          g_.bonds[adj_[a][0].second].order !=
              g_.bonds[adj_[cell[0]][0].second].order) {
        interchangeable = false;
        break;
      }
    }
    if (interchangeable) cell.resize(1);

    for (int x : cell) {
      std::vector<int> keys(n);
      for (std::size_t a = 0; a < n; ++a)
        keys[a] = 2 * r[a] + ((r[a] == target && static_cast<int>(a) != x) ? 1 : 0);
      search(refine(densify(keys)));
    }
  }

  const MolGraph& g_;
  std::vector<std::vector<std::pair<int, int>>> adj_;
  std::vector<std::string> labels_;
  std::string best_;
};

}  // namespace

std::string canonical_form(const MolGraph& graph) {
  if (graph.atoms.empty()) return {};
  return Canonicalizer(graph).run();
}

}  // namespace pocketgen::smiles
