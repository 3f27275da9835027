#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "circcal/camera.hpp"
#include "circcal/colormodel.hpp"

namespace circcal {

// Plain-text files written by the pipeline. Each starts with a
// `format = <schema>/<version>` line; readers reject other schemas.

inline constexpr const char* kModelFormat = "circcal-model/1";
inline constexpr const char* kThetaFormat = "circcal-theta/1";
inline constexpr const char* kReportFormat = "circcal-report/1";

struct ColorModelFile {
  ColorModelPair models;
  std::size_t foreground_samples = 0;
  std::size_t background_samples = 0;
};

/// Values are written with 17 significant digits so reloading is bit-exact.
void WriteModel(const std::filesystem::path& path, const ColorModelFile& model);
ColorModelFile ReadModel(const std::filesystem::path& path);

/// Angles are stored in radians for exact reloads; reports carry degrees.
void WriteTheta(const std::filesystem::path& path, const RigParams& theta);
RigParams ReadTheta(const std::filesystem::path& path);

/// Ordered sections of key = value lines. The timestamp lives only in the
/// first line of the written file, so payloads of identical runs compare equal.
class Report {
 public:
  void Section(const std::string& name);
  void Add(const std::string& key, const std::string& value);
  void Add(const std::string& key, double value);
  void Add(const std::string& key, long long value);
  void Add(const std::string& key, int value) { Add(key, static_cast<long long>(value)); }
  void Add(const std::string& key, std::size_t value) { Add(key, static_cast<long long>(value)); }
  /// Appends raw, already formatted lines (for example a configuration echo).
  void AddText(const std::string& text);

  /// Everything except the timestamp line.
  std::string Payload() const;

 private:
  std::string body_;
};

/// Writes `# written <UTC timestamp>` and the payload (header only on creation
/// when appending).
void WriteReport(const std::filesystem::path& path, const Report& report);
void AppendReport(const std::filesystem::path& path, const Report& report);

/// Report text without its timestamp line.
std::string ReadReportPayload(const std::filesystem::path& path);

/// Creates `dir` (and parents) if needed; kIo on failure.
void EnsureDirectory(const std::filesystem::path& dir);

}  // namespace circcal
