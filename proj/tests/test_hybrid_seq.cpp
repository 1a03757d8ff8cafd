#include <gtest/gtest.h>

#include "pocketgen/hybrid_seq.hpp"
#include "pocketgen/rng.hpp"
#include "test_util.hpp"

using namespace pocketgen;

namespace {

ProteinPocket two_atom_pocket() {
  ProteinPocket p;
  p.atoms.push_back({"N", "GLY", 1, {1.0, 2.0, 3.0}});
  p.atoms.push_back({"CA", "GLY", 1, {2.0, 2.0, 3.0}});
  return p;
}

LigandStruct ligand(const std::string& s, std::uint64_t seed = 1) {
  Rng rng(seed);
  LigandStruct l{s, {}};
  for (std::size_t i = 0; i < smiles::count_atom_tokens(s); ++i)
    l.coords.push_back({5 * rng.normal(), 5 * rng.normal(), 5 * rng.normal()});
  return l;
}

bool has_kind(const std::vector<Violation>& v, ViolationKind k) {
  for (const auto& x : v)
    if (x.kind == k) return true;
  return false;
}

}  // namespace

TEST(Vocab, NamespacesStayDistinct) {
  ProteinPocket p;
  for (const char* t : {"N", "CA", "C", "O"}) p.atoms.push_back({t, "GLY", 1, {}});
  const Vocab v = build_vocab({{p, LigandStruct{"C", {{0, 0, 0}}}}});
  EXPECT_EQ(v.size(), 6u + 1u + 4u);
  EXPECT_TRUE(v.contains("C"));
  EXPECT_TRUE(v.contains("P:C"));
  EXPECT_NE(v.id_of("C"), v.id_of("P:C"));
  EXPECT_EQ(v.kind(v.id_of("C")), VocabKind::SmilesAtom);
  EXPECT_EQ(v.kind(v.id_of("P:CA")), VocabKind::Pocket);
  EXPECT_EQ(v.pocket_id("CA"), v.id_of("P:CA"));
  EXPECT_EQ(v.token(special::kBos), "BOS");
  EXPECT_EQ(v.token(special::kPad), "PAD");
}

TEST(Vocab, UnknownTokenIsUnk) {
  const Vocab v = build_vocab({{two_atom_pocket(), ligand("CC")}});
  EXPECT_EQ(v.id_of("Br"), special::kUnk);
  EXPECT_EQ(v.pocket_id("S"), special::kUnk);
  const auto seq = encode_complex(two_atom_pocket(), ligand("CBr"), v);
  EXPECT_EQ(token_of(seq.elements[seq.ligand_start + 2]), special::kUnk);
}

TEST(Vocab, DeterministicAndTextRoundTrip) {
  std::vector<std::pair<ProteinPocket, LigandStruct>> corpus;
  for (const auto& s : {"c1ccccc1Cl", "CC(=O)[O-]", "C%10CC%10"})
    corpus.emplace_back(two_atom_pocket(), ligand(s));
  const Vocab a = build_vocab(corpus);
  const Vocab b = build_vocab(corpus);
  EXPECT_EQ(a, b);
  EXPECT_EQ(Vocab::from_text(a.to_text()), a);
  EXPECT_EQ(a.kind(a.id_of("%10")), VocabKind::SmilesRing);
  EXPECT_EQ(a.kind(a.id_of("(")), VocabKind::SmilesSymbol);
  EXPECT_EQ(a.kind(a.id_of("[O-]")), VocabKind::SmilesAtom);
}

TEST(Encode, LayoutArithmetic) {
  const auto pocket = two_atom_pocket();
  const auto lig = ligand("CC");
  const Vocab v = build_vocab({{pocket, lig}});
  const auto seq = encode_complex(pocket, lig, v);
  ASSERT_EQ(seq.size(), 12u);
  EXPECT_EQ(seq.ligand_start, 4u);
  EXPECT_EQ(token_of(seq.elements[4]), special::kBos);
  EXPECT_EQ(token_of(seq.elements[7]), special::kEos);
  EXPECT_EQ(token_of(seq.elements[8]), special::kBoc);
  EXPECT_EQ(token_of(seq.elements[11]), special::kEoc);
  EXPECT_EQ(token_of(seq.elements[0]), v.id_of("P:N"));
  EXPECT_FALSE(is_discrete(seq.elements[1]));
  EXPECT_EQ(seq.atom_alignment, (std::vector<std::size_t>{5, 6}));
  EXPECT_TRUE(validate(seq, v).empty());
}

TEST(Encode, RingDigitsGetNoCoordinates) {
  const auto lig = ligand("c1ccccc1");
  const Vocab v = build_vocab({{two_atom_pocket(), lig}});
  const auto seq = encode_complex(two_atom_pocket(), lig, v);
  std::size_t smiles_tokens = 0, ligand_coords = 0;
  bool in_smiles = false, in_coords = false;
  for (std::size_t i = seq.ligand_start; i < seq.size(); ++i) {
    const auto& e = seq.elements[i];
    if (is_discrete(e)) {
      const auto t = token_of(e);
      if (t == special::kBos) in_smiles = true;
      else if (t == special::kEos) in_smiles = false;
      else if (t == special::kBoc) in_coords = true;
      else if (t == special::kEoc) in_coords = false;
      else if (in_smiles) ++smiles_tokens;
    } else if (in_coords) {
      ++ligand_coords;
    }
  }
  EXPECT_EQ(smiles_tokens, 8u);
  EXPECT_EQ(ligand_coords, 6u);
}

TEST(Encode, CoordinateScale) {
  ProteinPocket p;
  p.atoms.push_back({"C", "ALA", 1, {10.0, 0.0, -5.0}});
  const LigandStruct lig{"C", {{10.0, 0.0, -5.0}}};
  const Vocab v = build_vocab({{p, lig}});
  const auto seq = encode_complex(p, lig, v, 5.0);
  EXPECT_EQ(coord_of(seq.elements[1]), (Vec3{2.0, 0.0, -1.0}));
  EXPECT_EQ(coord_of(seq.elements[seq.size() - 2]), (Vec3{2.0, 0.0, -1.0}));
}

TEST(Encode, PocketPrefix) {
  const Vocab v = build_vocab({{two_atom_pocket(), ligand("CC")}});
  const auto prefix = encode_pocket_prefix(two_atom_pocket(), v);
  ASSERT_EQ(prefix.size(), 5u);
  EXPECT_EQ(prefix.ligand_start, 4u);
  EXPECT_EQ(token_of(prefix.elements.back()), special::kBos);
}

TEST(Validate, Violations) {
  const auto lig = ligand("CCO");
  const Vocab v = build_vocab({{two_atom_pocket(), lig}});
  const auto good = encode_complex(two_atom_pocket(), lig, v);
  EXPECT_TRUE(validate(good, v).empty());

  auto fewer = good;
  fewer.elements.erase(fewer.elements.end() - 2);
  fewer.atom_alignment = good.atom_alignment;
  EXPECT_TRUE(has_kind(validate(fewer, v), ViolationKind::CoordCountMismatch));

  auto no_eoc = good;
  no_eoc.elements.pop_back();
  EXPECT_TRUE(has_kind(validate(no_eoc, v), ViolationKind::TruncatedLigandBlock));

  HybridSequence empty;
  EXPECT_TRUE(has_kind(validate(empty, v), ViolationKind::EmptySequence));

  auto bad_start = good;
  bad_start.ligand_start = 2;
  EXPECT_FALSE(validate(bad_start, v).empty());
}

TEST(Validate, RecomputeLayout) {
  const auto lig = ligand("C(N)O");
  const Vocab v = build_vocab({{two_atom_pocket(), lig}});
  const auto good = encode_complex(two_atom_pocket(), lig, v);
  auto stripped = good;
  stripped.ligand_start = 0;
  stripped.atom_alignment.clear();
  recompute_layout(stripped, v);
  EXPECT_EQ(stripped, good);
}

TEST(Serialize, ElementText) {
  const Vocab v = build_vocab({{two_atom_pocket(), ligand("C")}});
  HybridSequence s;
  s.elements = {Discrete{special::kBos}, Continuous{{0.5, -1.0, 2.0}}};
  EXPECT_EQ(serialize(s, v), "BOS <0.5,-1,2>");
}

TEST(Serialize, CorpusRoundTrip) {
  const auto corpus = testutil::desk_corpus();
  std::vector<std::pair<ProteinPocket, LigandStruct>> complexes;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    ProteinPocket p = two_atom_pocket();
    Rng rng(1000 + i);
    for (auto& a : p.atoms) a.coord = {rng.normal(), rng.normal(), rng.normal()};
    complexes.emplace_back(std::move(p), ligand(corpus[i], i));
  }
  const Vocab v = build_vocab(complexes);
  for (const auto& [p, l] : complexes) {
    const auto seq = encode_complex(p, l, v, 5.0);
    ASSERT_TRUE(validate(seq, v).empty()) << l.smiles;
    const auto line = serialize(seq, v);
    EXPECT_EQ(deserialize(line, v), seq) << line;
    EXPECT_EQ(deserialize(line + "\n", v), seq);
    const auto [p2, l2] = decode_complex(seq, v, 5.0);
    EXPECT_EQ(l2.smiles, l.smiles);
    ASSERT_EQ(l2.coords.size(), l.coords.size());
    for (std::size_t k = 0; k < l.coords.size(); ++k)
      for (int d = 0; d < 3; ++d) EXPECT_NEAR(l2.coords[k][d], l.coords[k][d], 1e-12);
    EXPECT_EQ(p2.atoms.size(), p.atoms.size());
  }
}

TEST(Serialize, ParseErrors) {
  const Vocab v = build_vocab({{two_atom_pocket(), ligand("C")}});
  EXPECT_THROW(deserialize("BOS <1,2>", v), HybridSeqError);
  EXPECT_THROW(deserialize("BOS <1,x,2>", v), HybridSeqError);
  try {
    deserialize("BOS C NOPE", v);
    FAIL();
  } catch (const HybridSeqError& e) {
    EXPECT_EQ(e.position(), 2u);
  }
}
