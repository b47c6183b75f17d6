#include "deepmatch/dataset.hpp"

#include <charconv>
#include <cstdio>

#include "deepmatch/errors.hpp"

namespace deepmatch {

namespace {

// Column slots in declaration order. The first five are mandatory.
enum Column : int {
  kQuery = 0,
  kTitle,
  kDescription,
  kUrl,
  kClick,
  kExternalScore,
  kTrueCtr,
  kDevice,
  kColumnCount,
};

const char* column_name(int col) {
  switch (col) {
    case kQuery: return "query";
    case kTitle: return "title";
    case kDescription: return "description";
    case kUrl: return "url";
    case kClick: return "click";
    case kExternalScore: return "external_score";
    case kTrueCtr: return "true_ctr";
    case kDevice: return "device";
    default: return "?";
  }
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

double parse_probability(const std::string& field, const char* what,
                         const std::string& path, std::size_t line_no) {
  double value = 0.0;
  const auto* begin = field.data();
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(path + ":" + std::to_string(line_no) + ": " + what +
                     " value '" + field + "' is not a real number");
  }
  if (!(value >= 0.0 && value <= 1.0)) {
    throw ParseError(path + ":" + std::to_string(line_no) + ": " + what +
                     " value " + field + " outside [0,1]");
  }
  return value;
}

std::string format_probability(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

}  // namespace

std::string device_name(Device device) {
  switch (device) {
    case Device::desktop: return "desktop";
    case Device::mobile: return "mobile";
    case Device::unknown: return "unknown";
  }
  return "unknown";
}

Device parse_device(const std::string& name) {
  if (name == "desktop") return Device::desktop;
  if (name == "mobile") return Device::mobile;
  if (name == "unknown") return Device::unknown;
  throw ParseError("unknown device '" + name + "'");
}

DatasetReader::DatasetReader(const std::string& path)
    : in_(path), path_(path) {
  if (!in_) throw ParseError("dataset: cannot open " + path);
  std::string header;
  if (!std::getline(in_, header)) {
    throw ParseError(path + ":1: missing header line");
  }
  ++line_no_;
  if (!header.empty() && header.back() == '\r') header.pop_back();

  const std::vector<std::string> names = split_tabs(header);
  field_of_column_.assign(kColumnCount, -1);
  for (std::size_t i = 0; i < names.size(); ++i) {
    int col = -1;
    for (int c = 0; c < kColumnCount; ++c) {
      if (names[i] == column_name(c)) {
        col = c;
        break;
      }
    }
    if (col < 0) {
      throw ParseError(path + ":1: unknown column '" + names[i] + "'");
    }
    if (field_of_column_[col] >= 0) {
      throw ParseError(path + ":1: duplicate column '" + names[i] + "'");
    }
    field_of_column_[col] = static_cast<int>(i);
  }
  for (int c = kQuery; c <= kClick; ++c) {
    if (field_of_column_[c] < 0) {
      throw ParseError(path + ":1: missing mandatory column '" +
                       column_name(c) + "'");
    }
  }
  field_count_ = names.size();
  columns_.external_score = field_of_column_[kExternalScore] >= 0;
  columns_.true_ctr = field_of_column_[kTrueCtr] >= 0;
  columns_.device = field_of_column_[kDevice] >= 0;
}

std::optional<QueryAdRecord> DatasetReader::next() {
  std::string line;
  if (!std::getline(in_, line)) return std::nullopt;
  ++line_no_;
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const std::vector<std::string> fields = split_tabs(line);
  if (fields.size() != field_count_) {
    throw ParseError(path_ + ":" + std::to_string(line_no_) + ": expected " +
                     std::to_string(field_count_) + " fields, found " +
                     std::to_string(fields.size()));
  }

  QueryAdRecord record;
  record.query = fields[field_of_column_[kQuery]];
  record.ad_title = fields[field_of_column_[kTitle]];
  record.ad_description = fields[field_of_column_[kDescription]];
  record.ad_display_url = fields[field_of_column_[kUrl]];

  const std::string& click = fields[field_of_column_[kClick]];
  if (click == "0") {
    record.click = 0;
  } else if (click == "1") {
    record.click = 1;
  } else {
    throw ParseError(path_ + ":" + std::to_string(line_no_) +
                     ": click value '" + click + "' outside {0,1}");
  }

  if (columns_.external_score) {
    record.external_score =
        parse_probability(fields[field_of_column_[kExternalScore]],
                          "external_score", path_, line_no_);
  }
  if (columns_.true_ctr) {
    record.true_ctr = parse_probability(fields[field_of_column_[kTrueCtr]],
                                        "true_ctr", path_, line_no_);
  }
  if (columns_.device) {
    try {
      record.device = parse_device(fields[field_of_column_[kDevice]]);
    } catch (const ParseError& e) {
      throw ParseError(path_ + ":" + std::to_string(line_no_) + ": " +
                       e.what());
    }
  }
  return record;
}

Dataset read_dataset(const std::string& path) {
  DatasetReader reader(path);
  Dataset dataset;
  dataset.columns = reader.columns();
  while (auto record = reader.next()) {
    dataset.records.push_back(std::move(*record));
  }
  return dataset;
}

void write_dataset(const std::string& path,
                   const std::vector<QueryAdRecord>& records,
                   const DatasetColumns& columns) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("dataset: cannot write " + path);

  auto check_field = [&](const std::string& field) -> const std::string& {
    if (field.find('\t') != std::string::npos ||
        field.find('\n') != std::string::npos) {
      throw Error("dataset: field contains tab or newline: '" + field + "'");
    }
    return field;
  };

  out << "query\ttitle\tdescription\turl\tclick";
  if (columns.external_score) out << "\texternal_score";
  if (columns.true_ctr) out << "\ttrue_ctr";
  if (columns.device) out << "\tdevice";
  out << '\n';

  for (const QueryAdRecord& r : records) {
    out << check_field(r.query) << '\t' << check_field(r.ad_title) << '\t'
        << check_field(r.ad_description) << '\t'
        << check_field(r.ad_display_url) << '\t' << r.click;
    if (columns.external_score) {
      if (!r.external_score) {
        throw Error("dataset: record missing declared external_score");
      }
      out << '\t' << format_probability(*r.external_score);
    }
    if (columns.true_ctr) {
      if (!r.true_ctr) {
        throw Error("dataset: record missing declared true_ctr");
      }
      out << '\t' << format_probability(*r.true_ctr);
    }
    if (columns.device) out << '\t' << device_name(r.device);
    out << '\n';
  }
  if (!out) throw Error("dataset: write failed for " + path);
}

}  // namespace deepmatch
