#include "crowdal/dataset_io.hpp"

#include <fstream>

#include "crowdal/config.hpp"

namespace crowdal {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start)));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

Label parse_label_token(std::string_view token, const std::string& source, std::size_t line) {
  if (token == "1" || token == "+1") return Label::Positive;
  if (token == "-1") return Label::Negative;
  throw ParseError(source, line, "label must be -1 or +1, got '" + std::string(token) + "'");
}

// Reads the header line, skipping leading blank lines. Returns its line number.
std::size_t expect_header(std::istream& in, const std::string& source, std::string_view header) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty()) continue;
    std::string normalized;
    for (auto f : fields(t)) {
      if (!normalized.empty()) normalized += ',';
      normalized += f;
    }
    if (normalized != header) {
      throw ParseError(source, line_no, "expected header '" + std::string(header) + "'");
    }
    return line_no;
  }
  throw ContractError(source + ": empty file");
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

std::size_t IdMap::intern(std::string_view id) {
  const auto [it, inserted] = index_.try_emplace(std::string(id), ids_.size());
  if (inserted) ids_.emplace_back(id);
  return it->second;
}

std::optional<std::size_t> IdMap::find(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

IdMap IdMap::sequential(std::size_t count) {
  IdMap map;
  for (std::size_t k = 0; k < count; ++k) map.intern(std::to_string(k));
  return map;
}

LabelDataset parse_labels(std::istream& in, const std::string& source) {
  std::size_t line_no = expect_header(in, source, "worker_id,task_id,label");
  LabelDataset data;
  struct Row {
    std::size_t worker, task;
    Label label;
  };
  std::vector<Row> rows;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty()) continue;
    const auto f = fields(t);
    if (f.size() != 3) throw ParseError(source, line_no, "expected 3 fields: worker_id,task_id,label");
    if (f[0].empty() || f[1].empty() || f[2].empty()) throw ParseError(source, line_no, "missing field");
    const Label label = parse_label_token(f[2], source, line_no);
    rows.push_back({data.workers.intern(f[0]), data.tasks.intern(f[1]), label});
  }
  if (rows.empty()) throw ContractError(source + ": no label rows");
  data.labels = LabelMatrix(data.workers.size(), data.tasks.size());
  for (const Row& r : rows) data.labels.add(r.worker, r.task, r.label);
  return data;
}

LabelDataset load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open label file " + path.string());
  return parse_labels(in, path.string());
}

void write_labels(std::ostream& out, const LabelDataset& data) {
  out << "worker_id,task_id,label\n";
  for (const LabelEvent& e : data.labels.events()) {
    out << data.workers.id(e.worker) << ',' << data.tasks.id(e.task) << ','
        << (e.label == Label::Positive ? "1" : "-1") << '\n';
  }
}

void write_labels(const std::filesystem::path& path, const LabelDataset& data) {
  auto out = open_for_write(path);
  write_labels(out, data);
}

TruthData parse_truth(std::istream& in, const std::string& source, const IdMap& tasks) {
  std::size_t line_no = expect_header(in, source, "task_id,label");
  TruthData data;
  data.truth.z_true.assign(tasks.size(), std::nullopt);
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty()) continue;
    const auto f = fields(t);
    if (f.size() != 2) throw ParseError(source, line_no, "expected 2 fields: task_id,label");
    if (f[0].empty() || f[1].empty()) throw ParseError(source, line_no, "missing field");
    const auto task = tasks.find(f[0]);
    if (!task) throw ParseError(source, line_no, "unknown task id '" + std::string(f[0]) + "'");
    if (data.truth.z_true[*task]) {
      throw ParseError(source, line_no, "duplicate truth for task '" + std::string(f[0]) + "'");
    }
    data.truth.z_true[*task] = parse_label_token(f[1], source, line_no);
    ++rows;
  }
  if (rows == 0) throw ContractError(source + ": no truth rows");
  if (rows < tasks.size()) {
    data.warnings.push_back(source + ": truth covers " + std::to_string(rows) + " of " +
                            std::to_string(tasks.size()) + " tasks; accuracy is computed over " +
                            std::to_string(rows) + " tasks");
  }
  return data;
}

TruthData load_truth(const std::filesystem::path& path, const IdMap& tasks) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open truth file " + path.string());
  return parse_truth(in, path.string(), tasks);
}

void write_truth(std::ostream& out, const GroundTruth& truth, const IdMap& tasks) {
  out << "task_id,label\n";
  for (TaskIndex j = 0; j < truth.z_true.size(); ++j) {
    if (!truth.z_true[j]) continue;
    out << tasks.id(j) << ',' << (*truth.z_true[j] == Label::Positive ? "1" : "-1") << '\n';
  }
}

void write_id_map(const std::filesystem::path& path, const IdMap& ids) {
  auto out = open_for_write(path);
  out << "index,id\n";
  for (std::size_t k = 0; k < ids.size(); ++k) out << k << ',' << ids.id(k) << '\n';
}

}  // namespace crowdal
