#ifndef POCKETGEN_METRICS_HPP_
#define POCKETGEN_METRICS_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pocketgen/error.hpp"
#include "pocketgen/smiles.hpp"

namespace pocketgen {

// Maximum bond-order sum for an element at a formal charge, or nullopt when
// the element is outside the table (B C N O F P S Cl Br I, plus H = 1).
std::optional<int> max_valence(std::string_view element, int charge);

// Every atom's bond-order sum (aromatic bonds count 1.5, the sum rounded
// half-up) is within max_valence. Implicit and bracket hydrogens are not
// counted.
bool valence_ok(const smiles::MolGraph& graph);

// Parses and passes valence_ok.
bool validity(std::string_view smiles);

struct Fingerprint {
  int n_bits = 2048;
  std::vector<std::uint64_t> words;

  explicit Fingerprint(int bits = 2048)
      : n_bits(bits), words(static_cast<std::size_t>((bits + 63) / 64), 0) {}
  void set(int i) { words[i / 64] |= std::uint64_t{1} << (i % 64); }
  bool test(int i) const { return (words[i / 64] >> (i % 64)) & 1u; }
  int count() const;
  bool operator==(const Fingerprint&) const = default;
};

// Morgan-style environment hashing. Round 0 hashes (element, degree,
// charge, aromatic); each later round hashes the previous identifier with
// the sorted (bond order, neighbor identifier) pairs. Every identifier of
// rounds 0..radius sets bit (id mod n_bits).
Fingerprint fingerprint(const smiles::MolGraph& graph, int radius = 2, int n_bits = 2048);

// 1 - |A & B| / |A | B|; 0 when both are empty.
double tanimoto_distance(const Fingerprint& a, const Fingerprint& b);

class TooFewMolecules : public DataError {
 public:
  TooFewMolecules() : DataError("TooFewMolecules: need at least two molecules") {}
};

// Mean Tanimoto distance over unordered pairs.
double internal_diversity(std::span<const smiles::MolGraph> mols);
double internal_diversity(std::span<const Fingerprint> fps);

struct SuccessThresholds {
  double vina_dock_max = -8.18;
  double qed_min = 0.25;
  double sa_min = 0.59;
};

class MissingProperty : public DataError {
 public:
  explicit MissingProperty(const std::string& name)
      : DataError("MissingProperty: " + name) {}
};

// vina_dock < max, qed > min and sa > min, all strict.
bool mpo_success(const std::map<std::string, double>& props,
                 const SuccessThresholds& thr = {});

using PropertyTable = std::map<std::size_t, std::map<std::string, double>>;

// Lines "index<TAB>vina_dock<TAB>qed<TAB>sa"; blank lines and lines starting
// with '#' are skipped.
PropertyTable parse_property_file(std::string_view text);

struct CandidateReport {
  std::size_t index = 0;
  std::string smiles;
  bool valid = false;
  std::string canonical;  // empty when invalid
  std::optional<bool> success;
};

struct GenerationReport {
  std::vector<CandidateReport> candidates;
  std::size_t n = 0;
  std::size_t n_valid = 0;
  double valid_fraction = 0.0;
  std::optional<double> unique_fraction;
  std::optional<double> diversity;
  std::string diversity_note;  // reason when diversity is absent
  std::optional<double> success_rate;
};

// Unique fraction is distinct canonical forms over valid candidates,
// diversity is taken over valid candidates, and the success rate (only with
// properties) counts invalid or property-less candidates as failures.
GenerationReport report(std::span<const std::string> smiles,
                        const PropertyTable* props = nullptr,
                        const SuccessThresholds& thr = {});

// One JSON object per candidate, then {"summary": {...}}.
std::string report_to_jsonl(const GenerationReport& r);

}  // namespace pocketgen

#endif  // POCKETGEN_METRICS_HPP_
