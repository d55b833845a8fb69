#pragma once

#include "advntk/common.hpp"

#include <atomic>
#include <string>
#include <vector>

namespace advntk {

/// Writes content to path via a temp file plus rename, so readers never see
/// a partial artifact.
void atomic_write_file(const std::string& path, const std::string& content);

/// CSV builder. Every file carries a header row and a trailing config_hash
/// column for provenance.
class CsvWriter {
 public:
  CsvWriter(std::vector<std::string> columns, std::string config_hash);
  void row(const std::vector<double>& values);
  void write(const std::string& path) const;
  const std::string& content() const { return body_; }

 private:
  std::vector<std::string> columns_;
  std::string config_hash_;
  std::string body_;
};

}  // namespace advntk
