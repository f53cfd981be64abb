#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "seamline/corpus.hpp"

namespace seamline {

enum class SplitMode { InDomain, OutOfDomain };
enum class Partition { Train, Val, Test };

std::string_view partition_name(Partition p);

struct SplitSpec {
  SplitMode mode = SplitMode::InDomain;
  std::map<std::string, Partition> assignments;  // doc_id -> partition
  std::optional<int> fold_id;                     // held-out prompt (OOD)
  std::uint64_t seed = 0;

  /// Documents assigned to `part`, in corpus order.
  std::vector<HybridDocument> select(const std::vector<HybridDocument>& docs, Partition part) const;
  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

/// Groups documents by source_id within each prompt, shuffles the groups
/// and assigns round(train * G) groups to train; the rest is split between
/// val and test in proportion, an odd leftover going to test. Throws
/// TooFewGroups when a prompt has fewer than three groups.
SplitSpec make_id_split(const std::vector<HybridDocument>& docs,
                        std::array<double, 3> ratios = {0.70, 0.15, 0.15}, std::uint64_t seed = 0);

/// One fold per prompt: that prompt is the test set, the other prompts'
/// source groups are split into train and val (val_fraction of groups).
/// Throws SinglePrompt for fewer than two prompts.
std::vector<SplitSpec> make_ood_folds(const std::vector<HybridDocument>& docs, std::uint64_t seed = 0,
                                      double val_fraction = 0.30);

/// {"mode": "id"|"ood", "seed", "folds": [{"fold_id", "assignments": {doc_id: "train"|"val"|"test"}}]}
nlohmann::json splits_to_json(const std::vector<SplitSpec>& splits);
std::vector<SplitSpec> splits_from_json(const nlohmann::json& j);
void save_splits(const std::vector<SplitSpec>& splits, const std::filesystem::path& path);
std::vector<SplitSpec> load_splits(const std::filesystem::path& path);

}  // namespace seamline
