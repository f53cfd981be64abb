#include "seamline/splits.hpp"

#include <cmath>
#include <set>

#include "seamline/corpus_io.hpp"
#include "seamline/error.hpp"
#include "seamline/rng.hpp"

namespace seamline {

using nlohmann::json;

std::string_view partition_name(Partition p) {
  switch (p) {
    case Partition::Train: return "train";
    case Partition::Val: return "val";
    case Partition::Test: return "test";
  }
  return "train";
}

namespace {

Partition parse_partition(const std::string& s) {
  if (s == "train") return Partition::Train;
  if (s == "val") return Partition::Val;
  if (s == "test") return Partition::Test;
  fail(Errc::Schema, "unknown partition '" + s + "'");
}

// prompt -> (source_id -> doc ids), both ordered.
std::map<int, std::map<std::string, std::vector<std::string>>> group_by_prompt(
    const std::vector<HybridDocument>& docs) {
  std::map<std::string, int> prompt_of_source;
  std::map<int, std::map<std::string, std::vector<std::string>>> out;
  for (const auto& doc : docs) {
    if (doc.source_id.empty()) fail(Errc::Schema, "document " + doc.doc_id + " has no source_id");
    auto [it, inserted] = prompt_of_source.emplace(doc.source_id, doc.prompt_id);
    // A source belongs to one prompt; later documents follow the first.
    out[it->second][doc.source_id].push_back(doc.doc_id);
  }
  return out;
}

void assign_group(SplitSpec& split, const std::vector<std::string>& doc_ids, Partition part) {
  for (const auto& id : doc_ids) {
    if (!split.assignments.emplace(id, part).second) fail(Errc::Schema, "duplicate doc_id " + id);
  }
}

}  // namespace

std::vector<HybridDocument> SplitSpec::select(const std::vector<HybridDocument>& docs, Partition part) const {
  std::vector<HybridDocument> out;
  for (const auto& doc : docs) {
    auto it = assignments.find(doc.doc_id);
    if (it != assignments.end() && it->second == part) out.push_back(doc);
  }
  return out;
}

SplitSpec make_id_split(const std::vector<HybridDocument>& docs, std::array<double, 3> ratios, std::uint64_t seed) {
  if (docs.empty()) fail(Errc::EmptyCorpus, "cannot split an empty corpus");
  SplitSpec split;
  split.mode = SplitMode::InDomain;
  split.seed = seed;
  for (const auto& [prompt, groups] : group_by_prompt(docs)) {
    const std::size_t g = groups.size();
    if (g < 3) {
      fail(Errc::TooFewGroups, "prompt " + std::to_string(prompt) + " has " + std::to_string(g) +
                                   " source groups; at least 3 are needed");
    }
    std::vector<std::string> keys;
    for (const auto& [source, ids] : groups) keys.push_back(source);
    Rng rng(derive_seed(seed, "id-split/" + std::to_string(prompt)));
    rng.shuffle(std::span<std::string>(keys));
    const auto train = static_cast<std::size_t>(std::llround(ratios[0] * static_cast<double>(g)));
    const std::size_t rest = g - std::min(train, g);
    const double tail = ratios[1] + ratios[2];
    const auto val = tail > 0 ? static_cast<std::size_t>(std::floor(static_cast<double>(rest) * ratios[1] / tail)) : 0;
    for (std::size_t i = 0; i < g; ++i) {
      const Partition part = i < train ? Partition::Train : (i < train + val ? Partition::Val : Partition::Test);
      assign_group(split, groups.at(keys[i]), part);
    }
  }
  return split;
}

std::vector<SplitSpec> make_ood_folds(const std::vector<HybridDocument>& docs, std::uint64_t seed,
                                      double val_fraction) {
  const auto by_prompt = group_by_prompt(docs);
  if (by_prompt.size() < 2) fail(Errc::SinglePrompt, "out-of-domain folds need at least two prompts");
  std::vector<SplitSpec> folds;
  for (const auto& [held_out, held_groups] : by_prompt) {
    SplitSpec split;
    split.mode = SplitMode::OutOfDomain;
    split.fold_id = held_out;
    split.seed = seed;
    std::vector<const std::vector<std::string>*> pool;
    for (const auto& [prompt, groups] : by_prompt) {
      if (prompt == held_out) {
        for (const auto& [source, ids] : groups) assign_group(split, ids, Partition::Test);
      } else {
        for (const auto& [source, ids] : groups) pool.push_back(&ids);
      }
    }
    Rng rng(derive_seed(seed, "ood-fold/" + std::to_string(held_out)));
    rng.shuffle(std::span<const std::vector<std::string>*>(pool));
    const auto val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(pool.size())));
    for (std::size_t i = 0; i < pool.size(); ++i) {
      assign_group(split, *pool[i], i < val ? Partition::Val : Partition::Train);
    }
    folds.push_back(std::move(split));
  }
  return folds;
}

json splits_to_json(const std::vector<SplitSpec>& splits) {
  json folds = json::array();
  for (const auto& s : splits) {
    json assignments = json::object();
    for (const auto& [id, part] : s.assignments) assignments[id] = std::string(partition_name(part));
    folds.push_back({{"fold_id", s.fold_id ? json(*s.fold_id) : json(nullptr)}, {"assignments", assignments}});
  }
  const bool ood = !splits.empty() && splits.front().mode == SplitMode::OutOfDomain;
  return {{"mode", ood ? "ood" : "id"}, {"seed", splits.empty() ? 0 : splits.front().seed}, {"folds", folds}};
}

std::vector<SplitSpec> splits_from_json(const json& j) {
  try {
    const auto mode = j.at("mode").get<std::string>() == "ood" ? SplitMode::OutOfDomain : SplitMode::InDomain;
    const auto seed = j.value("seed", std::uint64_t{0});
    std::vector<SplitSpec> out;
    for (const auto& f : j.at("folds")) {
      SplitSpec s;
      s.mode = mode;
      s.seed = seed;
      if (f.contains("fold_id") && !f["fold_id"].is_null()) s.fold_id = f["fold_id"].get<int>();
      for (const auto& [id, part] : f.at("assignments").items()) s.assignments[id] = parse_partition(part.get<std::string>());
      out.push_back(std::move(s));
    }
    return out;
  } catch (const json::exception& e) {
    fail(Errc::Schema, std::string("malformed split file: ") + e.what());
  }
}

void save_splits(const std::vector<SplitSpec>& splits, const std::filesystem::path& path) {
  write_text_file(path, splits_to_json(splits).dump(2) + "\n");
}

std::vector<SplitSpec> load_splits(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    fail(Errc::Parse, path.string() + ": " + e.what());
  }
  return splits_from_json(j);
}

}  // namespace seamline
