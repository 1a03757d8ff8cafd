#ifndef POCKETGEN_TOY_FIXTURE_HPP_
#define POCKETGEN_TOY_FIXTURE_HPP_

#include <algorithm>
#include <filesystem>
#include <utility>
#include <vector>

#include "pocketgen/data_pipeline.hpp"
#include "pocketgen/model.hpp"
#include "pocketgen/struct_io.hpp"
#include "pocketgen/trainer.hpp"
#include "test_util.hpp"

namespace testutil {

struct ToyCorpus {
  pocketgen::Vocab vocab;
  std::vector<pocketgen::ProteinPocket> pockets;     // centered like prep
  std::vector<pocketgen::LigandStruct> ligands;      // centered like prep
  std::vector<pocketgen::ProteinPocket> raw_pockets;  // file frame
  std::vector<pocketgen::HybridSequence> records;
};

// Same steps as the prep command, without files.
inline ToyCorpus load_toy(const std::string& sub = "toy") {
  using namespace pocketgen;
  ToyCorpus t;
  std::vector<std::filesystem::path> pdbs;
  for (const auto& e : std::filesystem::directory_iterator(data_dir() / sub))
    if (e.path().extension() == ".pdb") pdbs.push_back(e.path());
  std::sort(pdbs.begin(), pdbs.end());
  std::vector<std::pair<ProteinPocket, LigandStruct>> pairs;
  for (const auto& pdb : pdbs) {
    auto lig_path = pdb;
    lig_path.replace_extension(".lig");
    ProteinPocket p = parse_pocket_pdb(read_text(pdb), pdb.stem().string());
    LigandStruct l = parse_ligand_record(read_text(lig_path));
    if (!filter_rare_elements(l)) continue;
    t.raw_pockets.push_back(p);
    const auto moved = center_and_rotate(p.coords(), l.coords, 0, false);
    for (std::size_t i = 0; i < p.atoms.size(); ++i) p.atoms[i].coord = moved.pocket[i];
    l.coords = moved.ligand;
    pairs.emplace_back(p, l);
    t.pockets.push_back(p);
    t.ligands.push_back(l);
  }
  t.vocab = build_vocab(pairs);
  for (const auto& [p, l] : pairs) t.records.push_back(encode_complex(p, l, t.vocab));
  return t;
}

inline pocketgen::ModelConfig tiny_config(const ToyCorpus& t) {
  auto cfg = pocketgen::model_preset("tiny", static_cast<int>(t.vocab.size()));
  return cfg;
}

// Overfits the toy records without augmentation; returns the trained state.
inline pocketgen::TrainState overfit_toy(const ToyCorpus& t, int steps, std::uint64_t seed = 0,
                                         const std::string& preset = "tiny") {
  using namespace pocketgen;
  TrainState st = make_train_state(model_preset(preset, static_cast<int>(t.vocab.size())), seed);
  OptimConfig opt;
  opt.decay_steps = steps;
  const Batch batch = make_batch(t.records);
  for (int s = 0; s < steps; ++s) train_step(batch, st, JointLossConfig{}, opt);
  return st;
}

}  // namespace testutil

#endif  // POCKETGEN_TOY_FIXTURE_HPP_
