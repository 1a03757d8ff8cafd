#include "pocketgen/hybrid_seq.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <set>

#include "pocketgen/smiles.hpp"

namespace pocketgen {

namespace {

constexpr std::array<const char*, special::kCount> kSpecialNames = {
    "PAD", "BOS", "EOS", "BOC", "EOC", "UNK"};

VocabKind classify(std::string_view token) {
  for (const char* s : kSpecialNames) {
    if (token == s) return VocabKind::Special;
  }
  if (token.starts_with(kPocketPrefix)) return VocabKind::Pocket;
  try {
    const auto toks = smiles::tokenize(token);
    if (toks.size() == 1) {
      switch (toks[0].kind) {
        case smiles::TokenKind::Atom:
          return VocabKind::SmilesAtom;
        case smiles::TokenKind::RingDigit:
          return VocabKind::SmilesRing;
        case smiles::TokenKind::Symbol:
          return VocabKind::SmilesSymbol;
      }
    }
  } catch (const smiles::SmilesError&) {
  }
  throw DataError("token '" + std::string(token) + "' is not a vocabulary token");
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

Vocab::Vocab() : Vocab(std::vector<std::string>{}, 0) {}

Vocab::Vocab(std::vector<std::string> tokens, int) {
  std::set<std::string> rest;
  for (auto& t : tokens) {
    if (classify(t) == VocabKind::Special) continue;
    rest.insert(std::move(t));
  }
  for (const char* s : kSpecialNames) tokens_.emplace_back(s);
  tokens_.insert(tokens_.end(), rest.begin(), rest.end());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    kinds_.push_back(classify(tokens_[i]));
    ids_.emplace(tokens_[i], static_cast<TokenId>(i));
  }
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  return Vocab(std::move(tokens), 0);
}

TokenId Vocab::id_of(std::string_view token) const {
  const auto it = ids_.find(token);
  return it == ids_.end() ? special::kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const {
  return ids_.find(token) != ids_.end();
}

TokenId Vocab::pocket_id(std::string_view pocket_token) const {
  std::string key(kPocketPrefix);
  key += pocket_token;
  return id_of(key);
}

std::string Vocab::to_text() const {
  std::string out;
  for (const auto& t : tokens_) {
    out += t;
    out += '\n';
  }
  return out;
}

Vocab Vocab::from_text(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    if (end > start) lines.emplace_back(text.substr(start, end - start));
    start = end + 1;
  }
  if (lines.size() < special::kCount)
    throw DataError("vocabulary file is missing special tokens");
  for (std::size_t i = 0; i < special::kCount; ++i) {
    if (lines[i] != kSpecialNames[i])
      throw DataError("vocabulary special token " + std::to_string(i) +
                      " must be " + kSpecialNames[i]);
  }
  Vocab v = from_tokens(lines);
  if (v.tokens_ != lines)
    throw DataError("vocabulary file is not in canonical order");
  return v;
}

Vocab build_vocab(
    const std::vector<std::pair<ProteinPocket, LigandStruct>>& corpus) {
  std::vector<std::string> tokens;
  for (const auto& [pocket, ligand] : corpus) {
    for (const auto& atom : pocket.atoms)
      tokens.push_back(std::string(kPocketPrefix) + atom.token);
    for (auto& t : smiles::tokenize(ligand.smiles)) tokens.push_back(std::move(t.text));
  }
  return Vocab::from_tokens(std::move(tokens));
}

HybridSequence encode_pocket_prefix(const ProteinPocket& pocket,
                                    const Vocab& vocab, double scale) {
  if (!(scale > 0.0)) throw ConfigError("coordinate scale must be positive");
  HybridSequence seq;
  seq.elements.reserve(2 * pocket.atoms.size() + 1);
  const double inv = 1.0 / scale;
  for (const auto& atom : pocket.atoms) {
    seq.elements.push_back(Discrete{vocab.pocket_id(atom.token)});
    seq.elements.push_back(Continuous{inv * atom.coord});
  }
  seq.ligand_start = seq.elements.size();
  seq.elements.push_back(Discrete{special::kBos});
  return seq;
}

HybridSequence encode_complex(const ProteinPocket& pocket,
                              const LigandStruct& ligand, const Vocab& vocab,
                              double scale) {
  HybridSequence seq = encode_pocket_prefix(pocket, vocab, scale);
  const auto tokens = smiles::tokenize(ligand.smiles);
  const std::size_t n_atoms = smiles::count_atom_tokens(tokens);
  if (n_atoms != ligand.coords.size())
    throw StructIoError(StructIoError::Kind::CountMismatch,
                        "ligand coordinates do not match atom tokens", 0,
                        n_atoms, ligand.coords.size());
  for (const auto& t : tokens) {
    if (t.kind == smiles::TokenKind::Atom)
      seq.atom_alignment.push_back(seq.elements.size());
    seq.elements.push_back(Discrete{vocab.id_of(t.text)});
  }
  seq.elements.push_back(Discrete{special::kEos});
  seq.elements.push_back(Discrete{special::kBoc});
  const double inv = 1.0 / scale;
  for (const auto& c : ligand.coords) seq.elements.push_back(Continuous{inv * c});
  seq.elements.push_back(Discrete{special::kEoc});
  return seq;
}

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::EmptySequence: return "EmptySequence";
    case ViolationKind::PocketLayout: return "PocketLayout";
    case ViolationKind::MissingBos: return "MissingBos";
    case ViolationKind::MissingEos: return "MissingEos";
    case ViolationKind::MissingBoc: return "MissingBoc";
    case ViolationKind::UnexpectedContinuous: return "UnexpectedContinuous";
    case ViolationKind::UnexpectedDiscrete: return "UnexpectedDiscrete";
    case ViolationKind::TruncatedLigandBlock: return "TruncatedLigandBlock";
    case ViolationKind::TrailingElements: return "TrailingElements";
    case ViolationKind::CoordCountMismatch: return "CoordCountMismatch";
    case ViolationKind::LigandStartMismatch: return "LigandStartMismatch";
    case ViolationKind::AlignmentMismatch: return "AlignmentMismatch";
  }
  return "Unknown";
}

namespace {

bool is_token(const HybridElement& e, TokenId id) {
  return is_discrete(e) && token_of(e) == id;
}

}  // namespace

void recompute_layout(HybridSequence& seq, const Vocab& vocab) {
  seq.atom_alignment.clear();
  const auto& el = seq.elements;
  std::size_t bos = el.size();
  for (std::size_t i = 0; i < el.size(); ++i) {
    if (is_token(el[i], special::kBos)) {
      bos = i;
      break;
    }
  }
  seq.ligand_start = bos == el.size() ? 0 : bos;
  if (bos == el.size()) return;
  for (std::size_t i = bos + 1; i < el.size(); ++i) {
    if (!is_discrete(el[i])) break;
    const TokenId id = token_of(el[i]);
    if (id == special::kEos) break;
    if (id >= 0 && static_cast<std::size_t>(id) < vocab.size() &&
        vocab.is_smiles_atom(id))
      seq.atom_alignment.push_back(i);
  }
}

std::vector<Violation> validate(const HybridSequence& seq, const Vocab& vocab) {
  std::vector<Violation> out;
  const auto& el = seq.elements;
  if (el.empty()) {
    out.push_back({ViolationKind::EmptySequence, 0, "sequence is empty"});
    return out;
  }

  // Pocket block: (pocket token, coordinate) pairs up to BOS.
  std::size_t i = 0;
  while (i < el.size() && !is_token(el[i], special::kBos)) {
    const bool token_ok = is_discrete(el[i]) &&
                          static_cast<std::size_t>(token_of(el[i])) < vocab.size() &&
                          (vocab.kind(token_of(el[i])) == VocabKind::Pocket ||
                           token_of(el[i]) == special::kUnk);
    if (!token_ok || i + 1 >= el.size() || is_discrete(el[i + 1])) {
      out.push_back({ViolationKind::PocketLayout, i,
                     "pocket block must alternate pocket token and coordinate"});
      // Resynchronize on the next BOS.
      while (i < el.size() && !is_token(el[i], special::kBos)) ++i;
      break;
    }
    i += 2;
  }
  if (i >= el.size()) {
    out.push_back({ViolationKind::MissingBos, el.size(), "no BOS element"});
    return out;
  }
  const std::size_t bos = i;
  if (seq.ligand_start != bos)
    out.push_back({ViolationKind::LigandStartMismatch, seq.ligand_start,
                   "ligand_start does not point at BOS"});

  // SMILES span.
  std::vector<std::size_t> atom_positions;
  ++i;
  while (i < el.size() && !is_token(el[i], special::kEos)) {
    if (!is_discrete(el[i])) {
      out.push_back({ViolationKind::UnexpectedContinuous, i,
                     "coordinate inside the SMILES span"});
    } else if (static_cast<std::size_t>(token_of(el[i])) < vocab.size() &&
               vocab.is_smiles_atom(token_of(el[i]))) {
      atom_positions.push_back(i);
    }
    ++i;
  }
  if (i >= el.size()) {
    out.push_back({ViolationKind::MissingEos, el.size(), "no EOS element"});
    return out;
  }
  ++i;
  if (i >= el.size() || !is_token(el[i], special::kBoc)) {
    out.push_back({ViolationKind::MissingBoc, i, "EOS must be followed by BOC"});
    return out;
  }
  ++i;
  std::size_t coords = 0;
  while (i < el.size() && !is_discrete(el[i])) {
    ++coords;
    ++i;
  }
  bool closed = false;
  if (i >= el.size()) {
    out.push_back({ViolationKind::TruncatedLigandBlock, el.size(),
                   "coordinate block is not closed by EOC"});
  } else if (!is_token(el[i], special::kEoc)) {
    out.push_back({ViolationKind::UnexpectedDiscrete, i,
                   "discrete element inside the coordinate block"});
  } else {
    closed = true;
    if (i + 1 != el.size())
      out.push_back({ViolationKind::TrailingElements, i + 1,
                     "elements after EOC"});
  }
  if (coords != atom_positions.size() && (closed || coords > atom_positions.size()))
    out.push_back({ViolationKind::CoordCountMismatch, bos,
                   std::to_string(coords) + " coordinates for " +
                       std::to_string(atom_positions.size()) + " atom tokens"});
  if (seq.atom_alignment != atom_positions)
    out.push_back({ViolationKind::AlignmentMismatch, bos,
                   "atom_alignment does not list the atom-token positions"});
  return out;
}

std::string serialize(const HybridSequence& seq, const Vocab& vocab) {
  std::string out;
  for (std::size_t i = 0; i < seq.elements.size(); ++i) {
    if (i) out += ' ';
    const auto& e = seq.elements[i];
    if (is_discrete(e)) {
      out += vocab.token(token_of(e));
    } else {
      const Vec3& c = coord_of(e);
      out += '<';
      out += format_number(c[0]);
      out += ',';
      out += format_number(c[1]);
      out += ',';
      out += format_number(c[2]);
      out += '>';
    }
  }
  return out;
}

HybridSequence deserialize(std::string_view line, const Vocab& vocab) {
  HybridSequence seq;
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r'))
    line.remove_suffix(1);
  std::size_t pos = 0;
  std::size_t index = 0;
  while (pos < line.size()) {
    std::size_t end = line.find(' ', pos);
    if (end == std::string_view::npos) end = line.size();
    const std::string_view item = line.substr(pos, end - pos);
    if (item.empty()) throw HybridSeqError(index, "empty element");
    if (item.front() == '<') {
      if (item.back() != '>') throw HybridSeqError(index, "unterminated coordinate");
      std::string_view body = item.substr(1, item.size() - 2);
      Vec3 c{};
      for (int k = 0; k < 3; ++k) {
        const std::size_t comma = k < 2 ? body.find(',') : body.size();
        if (comma == std::string_view::npos)
          throw HybridSeqError(index, "coordinate needs three components");
        const std::string_view num = body.substr(0, comma);
        const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), c[k]);
        if (ec != std::errc() || ptr != num.data() + num.size() || num.empty())
          throw HybridSeqError(index, "bad number '" + std::string(num) + "'");
        body = k < 2 ? body.substr(comma + 1) : std::string_view{};
      }
      seq.elements.push_back(Continuous{c});
    } else {
      if (!vocab.contains(item))
        throw HybridSeqError(index, "unknown token '" + std::string(item) + "'");
      seq.elements.push_back(Discrete{vocab.id_of(item)});
    }
    ++index;
    pos = end + 1;
  }
  recompute_layout(seq, vocab);
  return seq;
}

std::pair<ProteinPocket, LigandStruct> decode_complex(const HybridSequence& seq,
                                                      const Vocab& vocab,
                                                      double scale) {
  if (const auto v = validate(seq, vocab); !v.empty())
    throw DataError(std::string("cannot decode invalid record: ") +
                    to_string(v.front().kind));
  ProteinPocket pocket;
  LigandStruct ligand;
  const auto& el = seq.elements;
  for (std::size_t i = 0; i < seq.ligand_start; i += 2) {
    PocketAtom atom;
    atom.token = vocab.token(token_of(el[i])).substr(kPocketPrefix.size());
    atom.coord = scale * coord_of(el[i + 1]);
    pocket.atoms.push_back(std::move(atom));
  }
  std::size_t i = seq.ligand_start + 1;
  for (; !is_token(el[i], special::kEos); ++i) ligand.smiles += vocab.token(token_of(el[i]));
  for (i += 2; !is_token(el[i], special::kEoc); ++i)
    ligand.coords.push_back(scale * coord_of(el[i]));
  return {std::move(pocket), std::move(ligand)};
}

}  // namespace pocketgen
