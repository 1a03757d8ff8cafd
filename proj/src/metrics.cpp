#include "pocketgen/metrics.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <set>

#include "json.hpp"

namespace pocketgen {

namespace {

struct ValenceEntry {
  std::string_view element;
  int base;
  enum class Rule { AddCharge, SubAbs, SubCharge } rule;
};

constexpr ValenceEntry kValence[] = {
    {"B", 3, ValenceEntry::Rule::SubCharge},  {"C", 4, ValenceEntry::Rule::SubAbs},
    {"N", 3, ValenceEntry::Rule::AddCharge},  {"O", 2, ValenceEntry::Rule::AddCharge},
    {"F", 1, ValenceEntry::Rule::AddCharge},  {"P", 5, ValenceEntry::Rule::AddCharge},
    {"S", 6, ValenceEntry::Rule::AddCharge},  {"Cl", 1, ValenceEntry::Rule::AddCharge},
    {"Br", 1, ValenceEntry::Rule::AddCharge}, {"I", 1, ValenceEntry::Rule::AddCharge},
    {"H", 1, ValenceEntry::Rule::SubAbs},
};

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t combine(std::uint64_t h, std::uint64_t v) { return mix64(h ^ mix64(v)); }

std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::optional<int> max_valence(std::string_view element, int charge) {
  for (const auto& e : kValence) {
    if (e.element != element) continue;
    switch (e.rule) {
      case ValenceEntry::Rule::AddCharge: return e.base + charge;
      case ValenceEntry::Rule::SubAbs: return e.base - std::abs(charge);
      case ValenceEntry::Rule::SubCharge: return e.base - charge;
    }
  }
  return std::nullopt;
}

bool valence_ok(const smiles::MolGraph& graph) {
  std::vector<int> twice(graph.atom_count(), 0);  // bond-order sum x 2
  for (const auto& b : graph.bonds) {
    const int w = b.order == smiles::BondOrder::Aromatic ? 3 : 2 * static_cast<int>(b.order);
    twice[b.a] += w;
    twice[b.b] += w;
  }
  for (std::size_t i = 0; i < graph.atom_count(); ++i) {
    const auto& a = graph.atoms[i];
    const auto mv = max_valence(a.element, a.charge);
    if (!mv) return false;
    const int rounded = (twice[i] + 1) / 2;  // half-up
    if (rounded > *mv) return false;
  }
  return true;
}

bool validity(std::string_view smiles) {
  try {
    return valence_ok(smiles::parse(smiles));
  } catch (const smiles::SmilesError&) {
    return false;
  }
}

int Fingerprint::count() const {
  int n = 0;
  for (auto w : words) n += std::popcount(w);
  return n;
}

Fingerprint fingerprint(const smiles::MolGraph& graph, int radius, int n_bits) {
  Fingerprint fp(n_bits);
  const auto adj = graph.adjacency();
  const std::size_t n = graph.atom_count();
  std::vector<std::uint64_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = graph.atoms[i];
    std::uint64_t h = hash_string(a.element);
    h = combine(h, adj[i].size());
    h = combine(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(a.charge)));
    h = combine(h, a.aromatic ? 1 : 0);
    ids[i] = h;
  }
  auto emit = [&] {
    for (auto id : ids) fp.set(static_cast<int>(id % static_cast<std::uint64_t>(n_bits)));
  };
  emit();
  for (int r = 1; r <= radius; ++r) {
    std::vector<std::uint64_t> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::pair<int, std::uint64_t>> env;
      for (auto [nb, bi] : adj[i])
        env.emplace_back(static_cast<int>(graph.bonds[bi].order), ids[nb]);
      std::sort(env.begin(), env.end());
      std::uint64_t h = combine(static_cast<std::uint64_t>(r), ids[i]);
      for (auto [order, id] : env) h = combine(combine(h, order), id);
      next[i] = h;
    }
    ids.swap(next);
    emit();
  }
  return fp;
}

double tanimoto_distance(const Fingerprint& a, const Fingerprint& b) {
  if (a.n_bits != b.n_bits) throw DataError("fingerprint widths differ");
  int inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.words.size(); ++i) {
    inter += std::popcount(a.words[i] & b.words[i]);
    uni += std::popcount(a.words[i] | b.words[i]);
  }
  if (uni == 0) return 0.0;
  return 1.0 - static_cast<double>(inter) / uni;
}

double internal_diversity(std::span<const Fingerprint> fps) {
  if (fps.size() < 2) throw TooFewMolecules();
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < fps.size(); ++i)
    for (std::size_t j = i + 1; j < fps.size(); ++j) {
      sum += tanimoto_distance(fps[i], fps[j]);
      ++pairs;
    }
  return sum / static_cast<double>(pairs);
}

double internal_diversity(std::span<const smiles::MolGraph> mols) {
  if (mols.size() < 2) throw TooFewMolecules();
  std::vector<Fingerprint> fps;
  for (const auto& m : mols) fps.push_back(fingerprint(m));
  return internal_diversity(fps);
}

bool mpo_success(const std::map<std::string, double>& props, const SuccessThresholds& thr) {
  auto get = [&](const char* k) {
    const auto it = props.find(k);
    if (it == props.end()) throw MissingProperty(k);
    return it->second;
  };
  const double vina = get("vina_dock");
  const double qed = get("qed");
  const double sa = get("sa");
  return vina < thr.vina_dock_max && qed > thr.qed_min && sa > thr.sa_min;
}

PropertyTable parse_property_file(std::string_view text) {
  PropertyTable out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string_view> f;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == '\t') {
        f.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    const std::string where = "property file line " + std::to_string(line_no);
    if (f.size() != 4) throw DataError(where + ": expected 4 tab-separated fields");
    std::size_t index = 0;
    if (auto [p, ec] = std::from_chars(f[0].data(), f[0].data() + f[0].size(), index);
        ec != std::errc() || p != f[0].data() + f[0].size())
      throw DataError(where + ": bad index");
    std::map<std::string, double> props;
    const char* names[] = {"vina_dock", "qed", "sa"};
    for (int k = 0; k < 3; ++k) {
      double v = 0.0;
      const auto& s = f[k + 1];
      if (auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
          ec != std::errc() || p != s.data() + s.size())
        throw DataError(where + ": bad number for " + names[k]);
      props[names[k]] = v;
    }
    out[index] = std::move(props);
  }
  return out;
}

GenerationReport report(std::span<const std::string> smiles, const PropertyTable* props,
                        const SuccessThresholds& thr) {
  GenerationReport r;
  r.n = smiles.size();
  std::vector<Fingerprint> fps;
  std::set<std::string> distinct;
  std::size_t successes = 0;
  for (std::size_t i = 0; i < smiles.size(); ++i) {
    CandidateReport c;
    c.index = i;
    c.smiles = smiles[i];
    try {
      const auto g = smiles::parse(smiles[i]);
      if (valence_ok(g)) {
        c.valid = true;
        c.canonical = smiles::canonical_form(g);
        distinct.insert(c.canonical);
        fps.push_back(fingerprint(g));
      }
    } catch (const smiles::SmilesError&) {
    }
    if (props) {
      const auto it = props->find(i);
      c.success = c.valid && it != props->end() && mpo_success(it->second, thr);
      if (*c.success) ++successes;
    }
    if (c.valid) ++r.n_valid;
    r.candidates.push_back(std::move(c));
  }
  r.valid_fraction = r.n ? static_cast<double>(r.n_valid) / r.n : 0.0;
  if (r.n_valid > 0)
    r.unique_fraction = static_cast<double>(distinct.size()) / r.n_valid;
  if (fps.size() >= 2)
    r.diversity = internal_diversity(fps);
  else
    r.diversity_note = "fewer than two valid molecules";
  if (props) r.success_rate = r.n ? static_cast<double>(successes) / r.n : 0.0;
  return r;
}

std::string report_to_jsonl(const GenerationReport& r) {
  using nlohmann::json;
  std::string out;
  for (const auto& c : r.candidates) {
    json j = {{"index", c.index}, {"smiles", c.smiles}, {"valid", c.valid}};
    if (c.valid) j["canonical"] = c.canonical;
    if (c.success) j["success"] = *c.success;
    out += j.dump() + "\n";
  }
  json s = {{"n", r.n}, {"n_valid", r.n_valid}, {"valid_fraction", r.valid_fraction}};
  s["unique_fraction"] = r.unique_fraction ? json(*r.unique_fraction) : json(nullptr);
  if (r.diversity) {
    s["diversity"] = *r.diversity;
  } else {
    s["diversity"] = nullptr;
    s["diversity_note"] = r.diversity_note;
  }
  if (r.success_rate) s["success_rate"] = *r.success_rate;
  out += json{{"summary", s}}.dump() + "\n";
  return out;
}

}  // namespace pocketgen
