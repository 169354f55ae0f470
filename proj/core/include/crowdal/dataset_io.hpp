#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "crowdal/label_matrix.hpp"
#include "crowdal/simulation.hpp"

namespace crowdal {

/// Dense index <-> external identifier, in order of first appearance.
class IdMap {
 public:
  std::size_t intern(std::string_view id);
  std::optional<std::size_t> find(std::string_view id) const;
  const std::string& id(std::size_t index) const { return ids_.at(index); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  std::size_t size() const noexcept { return ids_.size(); }

  /// Dense indices "0", "1", ... as identifiers.
  static IdMap sequential(std::size_t count);

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct LabelDataset {
  LabelMatrix labels;
  IdMap workers;
  IdMap tasks;
};

/// CSV with header `worker_id,task_id,label`, label in {-1,+1}.
/// Malformed rows raise ParseError with the line number; a file with no data
/// rows raises ContractError.
LabelDataset parse_labels(std::istream& in, const std::string& source);
LabelDataset load_labels(const std::filesystem::path& path);
void write_labels(std::ostream& out, const LabelDataset& data);
void write_labels(const std::filesystem::path& path, const LabelDataset& data);

struct TruthData {
  GroundTruth truth;
  std::vector<std::string> warnings;
};

/// CSV with header `task_id,label`. Task ids must exist in `tasks`; tasks
/// without a row are left unscored and produce a warning.
TruthData parse_truth(std::istream& in, const std::string& source, const IdMap& tasks);
TruthData load_truth(const std::filesystem::path& path, const IdMap& tasks);
void write_truth(std::ostream& out, const GroundTruth& truth, const IdMap& tasks);

/// `index,id` rows.
void write_id_map(const std::filesystem::path& path, const IdMap& ids);

}  // namespace crowdal
