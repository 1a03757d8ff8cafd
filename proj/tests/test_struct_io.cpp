#include <gtest/gtest.h>

#include "pocketgen/struct_io.hpp"
#include "test_util.hpp"

using namespace pocketgen;

namespace {

const char* kAsp = "ATOM      1  N   ASP A  30      11.040  22.513   8.094  1.00 20.00           N";

StructIoError::Kind pdb_error(const std::string& text) {
  try {
    parse_pocket_pdb(text);
  } catch (const StructIoError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error";
  return StructIoError::Kind::BadNumber;
}

}  // namespace

TEST(Pdb, FixedColumns) {
  const auto p = parse_pocket_pdb(kAsp, "x");
  ASSERT_EQ(p.atoms.size(), 1u);
  EXPECT_EQ(p.atoms[0].token, "N");
  EXPECT_EQ(p.atoms[0].residue_name, "ASP");
  EXPECT_EQ(p.atoms[0].residue_seq, 30);
  EXPECT_DOUBLE_EQ(p.atoms[0].coord[0], 11.040);
  EXPECT_DOUBLE_EQ(p.atoms[0].coord[1], 22.513);
  EXPECT_DOUBLE_EQ(p.atoms[0].coord[2], 8.094);
  EXPECT_EQ(p.source_id, "x");
}

TEST(Pdb, AlphaCarbonLabel) {
  const auto p = parse_pocket_pdb(
      "ATOM      2  CA  GLY A   1       1.000   2.000   3.000  1.00  0.00           C\n"
      "ATOM      3  C   GLY A   1       1.500   2.000   3.000  1.00  0.00           C\n");
  ASSERT_EQ(p.atoms.size(), 2u);
  EXPECT_EQ(p.atoms[0].token, "CA");
  EXPECT_EQ(p.atoms[1].token, "C");
}

TEST(Pdb, CalciumIsNotAlphaCarbon) {
  const auto p = parse_pocket_pdb(
      "ATOM      1 CA    CA A   1       1.000   2.000   3.000  1.00  0.00          CA\n");
  EXPECT_EQ(p.atoms[0].token, "CA");
  const auto q = parse_pocket_pdb(
      "ATOM      1  CA  GLY A   1       1.000   2.000   3.000  1.00  0.00           C\n");
  EXPECT_EQ(q.atoms[0].token, "CA");
}

TEST(Pdb, HydrogensOnlyIsEmpty) {
  EXPECT_EQ(
      pdb_error("ATOM      1  H   GLY A   1       1.000   2.000   3.000  1.00  0.00           H\n"
                "ATOM      2 HA2  GLY A   1       1.000   2.000   3.000  1.00  0.00           H\n"),
      StructIoError::Kind::EmptyPocket);
}

TEST(Pdb, SkipsOtherRecords) {
  const std::string text = std::string("HEADER    TEST\nHETATM    1  O   HOH A 100       0.000   0.000   0.000\n") +
                           kAsp + "\nTER\nEND\n";
  EXPECT_EQ(parse_pocket_pdb(text).atoms.size(), 1u);
}

TEST(Pdb, ElementFromNameWhenColumnMissing) {
  const auto p = parse_pocket_pdb("ATOM      1  OG  SER A   5       0.000   1.000   2.000");
  EXPECT_EQ(p.atoms[0].token, "O");
}

TEST(Pdb, MalformedLines) {
  EXPECT_EQ(pdb_error("ATOM      1  N   ASP A  30      11.040  22.513"),
            StructIoError::Kind::MalformedLine);
  try {
    parse_pocket_pdb(std::string(kAsp) + "\nATOM      2  N   ASP A  30      11.0x0  22.513   8.094  1.00 20.00           N\n");
    FAIL();
  } catch (const StructIoError& e) {
    EXPECT_EQ(e.kind(), StructIoError::Kind::MalformedLine);
    EXPECT_EQ(e.line_no(), 2u);
  }
}

TEST(Pdb, ToyFiles) {
  const auto p = parse_pocket_pdb(testutil::read_text(testutil::data_dir() / "toy/cplx00.pdb"));
  EXPECT_GT(p.atoms.size(), 4u);
  for (const auto& a : p.atoms) EXPECT_NE(a.token, "H");
}

TEST(LigandRecord, ThreeAtoms) {
  const auto l = parse_ligand_record("CCO\n0 0 0\n1.5 0 0\n2.1 1.1 0");
  EXPECT_EQ(l.smiles, "CCO");
  ASSERT_EQ(l.coords.size(), 3u);
  EXPECT_EQ(l.coords[2], (Vec3{2.1, 1.1, 0.0}));
}

TEST(LigandRecord, CountMismatch) {
  try {
    parse_ligand_record("CCO\n0 0 0");
    FAIL();
  } catch (const StructIoError& e) {
    EXPECT_EQ(e.kind(), StructIoError::Kind::CountMismatch);
    EXPECT_EQ(e.expected(), 3u);
    EXPECT_EQ(e.got(), 1u);
  }
}

TEST(LigandRecord, RingDigitsHaveNoCoordinates) {
  std::string text = "c1ccccc1\n";
  for (int i = 0; i < 6; ++i) text += std::to_string(i) + " 0 0\n";
  EXPECT_EQ(parse_ligand_record(text).coords.size(), 6u);
}

TEST(LigandRecord, BadNumber) {
  try {
    parse_ligand_record("CC\n0 0 0\n1 zero 0\n");
    FAIL();
  } catch (const StructIoError& e) {
    EXPECT_EQ(e.kind(), StructIoError::Kind::BadNumber);
    EXPECT_EQ(e.line_no(), 3u);
  }
}

TEST(WriteLigand, SingleCarbon) {
  const std::vector<Vec3> c = {{0, 0, 0}};
  EXPECT_EQ(write_ligand(smiles::parse("C"), c), "C\n0.000 0.000 0.000");
}

TEST(WriteLigand, RoundTripToThreeDecimals) {
  const auto g = smiles::parse("c1ccc(Cl)cc1C(=O)O");
  std::vector<Vec3> c;
  for (std::size_t i = 0; i < g.atom_count(); ++i)
    c.push_back({0.1234567 * i, -1.98765 * i, 3.0 + 0.0005 * i});
  const auto back = parse_ligand_record(write_ligand(g, c));
  ASSERT_EQ(back.coords.size(), c.size());
  for (std::size_t i = 0; i < c.size(); ++i)
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(back.coords[i][k], c[i][k], 5e-4 + 1e-12);
}

TEST(WriteLigand, CountMismatch) {
  const std::vector<Vec3> c = {{0, 0, 0}};
  try {
    write_ligand(smiles::parse("CC"), c);
    FAIL();
  } catch (const StructIoError& e) {
    EXPECT_EQ(e.kind(), StructIoError::Kind::CountMismatch);
  }
}

TEST(FormatCoord, NegativeZero) {
  EXPECT_EQ(format_coord(-0.0001), "0.000");
  EXPECT_EQ(format_coord(-1.25), "-1.250");
}
