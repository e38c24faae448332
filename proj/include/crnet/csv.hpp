#pragma once

// CSV reports with a schema-version header line. Doubles are printed with
// %.17g so identical runs produce byte-identical files.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace crnet {

inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(std::string schema, const std::vector<std::string>& columns)
      : schema_(std::move(schema)) {
    buf_ << "# crnet-csv schema=" << schema_ << "\n";
    for (size_t i = 0; i < columns.size(); ++i) {
      buf_ << (i ? "," : "") << columns[i];
    }
    buf_ << "\n";
    width_ = columns.size();
  }

  CsvWriter& cell(const std::string& v) {
    row_.push_back(v);
    return *this;
  }
  CsvWriter& cell(double v) { return cell(fmt17(v)); }
  CsvWriter& cell(int v) { return cell(std::to_string(v)); }
  CsvWriter& cell(long long v) { return cell(std::to_string(v)); }

  void end_row() {
    if (row_.size() != width_) {
      throw std::logic_error("CsvWriter: row width mismatch in schema " + schema_);
    }
    for (size_t i = 0; i < row_.size(); ++i) buf_ << (i ? "," : "") << row_[i];
    buf_ << "\n";
    row_.clear();
  }

  std::string str() const { return buf_.str(); }

  void write(const std::string& path) const {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << buf_.str();
  }

 private:
  std::string schema_;
  std::ostringstream buf_;
  std::vector<std::string> row_;
  size_t width_ = 0;
};

}  // namespace crnet
