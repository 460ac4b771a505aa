#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "scod/numeric.hpp"

namespace scod {

enum class RecordOrigin { kInlier, kOutlier, kWild, kStrictInlier };

const char* origin_tag(RecordOrigin origin);
RecordOrigin parse_origin_tag(const std::string& tag);

/// One row of the `scod-logits v1` exchange format:
///   origin, label-or-dash, L logits, ood-logit-or-dash, E embedding values.
struct LogitsRecord {
    RecordOrigin origin = RecordOrigin::kInlier;
    std::optional<int> label;
    Vec logits;
    std::optional<double> ood_logit;
    Vec embedding;  // empty when E = 0
};

struct LogitsFile {
    int num_classes = 0;
    int embedding_dim = 0;
    std::vector<LogitsRecord> records;
};

class LogitsFormatError : public std::runtime_error {
  public:
    LogitsFormatError(const std::string& msg, int line)
        : std::runtime_error("line " + std::to_string(line) + ": " + msg),
          line_(line) {}
    int line() const { return line_; }

  private:
    int line_;
};

/// Header `scod-logits v1 L=<n> E=<m>`, then one comma-separated record per
/// line. Dimensions are enforced against the header; violations carry the
/// 1-based line number. An empty record section is an error.
LogitsFile read_logits(std::istream& is);
LogitsFile read_logits_file(const std::string& path);

void write_logits(std::ostream& os, const LogitsFile& file);
void write_logits_file(const std::string& path, const LogitsFile& file);

}  // namespace scod
