#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace deepmatch {

enum class Device { desktop, mobile, unknown };

std::string device_name(Device device);
Device parse_device(const std::string& name);

/// One sponsored-search impression: the query, the three textual ad fields,
/// and the binary click feedback. external_score optionally carries a CTR
/// prediction from an outside model; true_ctr the generating Bernoulli
/// parameter when the data is synthetic.
struct QueryAdRecord {
  std::string query;
  std::string ad_title;
  std::string ad_description;
  std::string ad_display_url;
  int click = 0;
  std::optional<double> external_score;
  std::optional<double> true_ctr;
  Device device = Device::unknown;
};

/// Which optional columns the dataset file declares.
struct DatasetColumns {
  bool external_score = false;
  bool true_ctr = false;
  bool device = false;
};

/// Streaming reader for the tab-separated impression log format. The header
/// line must name the mandatory columns query, title, description, url,
/// click; external_score, true_ctr, and device are optional. Single
/// consumer; all parse errors carry the offending line number.
class DatasetReader {
 public:
  explicit DatasetReader(const std::string& path);

  const DatasetColumns& columns() const { return columns_; }
  /// Next record, or nullopt at end of file.
  std::optional<QueryAdRecord> next();

 private:
  std::ifstream in_;
  std::string path_;
  std::size_t line_no_ = 0;
  std::vector<int> field_of_column_;  // column slot -> tab field index
  std::size_t field_count_ = 0;
  DatasetColumns columns_;
};

struct Dataset {
  std::vector<QueryAdRecord> records;
  DatasetColumns columns;
};

Dataset read_dataset(const std::string& path);

/// Writes records in the reader's format. Fields must not contain tabs or
/// newlines. Optional columns are emitted per `columns`.
void write_dataset(const std::string& path,
                   const std::vector<QueryAdRecord>& records,
                   const DatasetColumns& columns);

}  // namespace deepmatch
