#pragma once

#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "tunesmith/error.hpp"

namespace tunesmith {

struct ReportEntry {
  std::string subject;  // file path, chunk index, unit name ...
  std::string reason;

  bool operator==(const ReportEntry&) const = default;
};

// Line-oriented report: one `<subject>\t<reason>` line per entry.
class Report {
 public:
  void add(std::string subject, std::string reason) {
    entries_.push_back({std::move(subject), std::move(reason)});
  }
  void append(const Report& other) {
    entries_.insert(entries_.end(), other.entries_.begin(), other.entries_.end());
  }

  const std::vector<ReportEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  void write(std::ostream& out) const {
    for (const auto& e : entries_) out << e.subject << '\t' << e.reason << '\n';
  }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write report " + path);
    write(out);
    if (!out) throw IoError("write failed for report " + path);
  }

 private:
  std::vector<ReportEntry> entries_;
};

}  // namespace tunesmith
