#include "circcal/files.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include "circcal/config.hpp"
#include "circcal/error.hpp"

namespace circcal {

namespace {

// Flat key = value reader for the model and theta files.
std::map<std::string, std::string> ReadKeyValues(const std::filesystem::path& path, const char* format) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::map<std::string, std::string> kv;
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  const auto it = kv.find("format");
  if (it == kv.end() || it->second != format)
    throw IoError(path.string() + ": expected format = " + std::string(format) +
                  (it == kv.end() ? std::string(", found none") : ", found " + it->second));
  return kv;
}

const std::string& Require(const std::map<std::string, std::string>& kv, const std::string& key,
                           const std::filesystem::path& path) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw IoError(path.string() + ": missing key '" + key + "'");
  return it->second;
}

std::vector<double> Numbers(const std::string& text, const std::string& key, const std::filesystem::path& path) {
  std::istringstream in(text);
  std::vector<double> out;
  std::string token;
  while (in >> token) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) throw IoError(path.string() + ": bad number '" + token + "' for " + key);
    out.push_back(v);
  }
  return out;
}

std::string Join(const double* values, std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += FormatDouble(values[i]);
  }
  return s;
}

void WriteText(const std::filesystem::path& path, const std::string& text, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

std::string UtcTimestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void WriteModel(const std::filesystem::path& path, const ColorModelFile& model) {
  std::ostringstream out;
  out << "format = " << kModelFormat << '\n';
  auto write = [&](const char* name, const ColorGaussian& g, std::size_t samples) {
    out << name << ".samples = " << samples << '\n';
    out << name << ".mean = " << Join(g.mean().data(), 3) << '\n';
    out << name << ".covariance = " << Join(g.covariance().data(), 9) << '\n';
  };
  write("foreground", model.models.foreground, model.foreground_samples);
  write("background", model.models.background, model.background_samples);
  WriteText(path, out.str(), std::ios::out | std::ios::trunc);
}

ColorModelFile ReadModel(const std::filesystem::path& path) {
  const auto kv = ReadKeyValues(path, kModelFormat);
  auto read = [&](const std::string& name, std::size_t& samples) {
    const auto mean = Numbers(Require(kv, name + ".mean", path), name + ".mean", path);
    const auto cov = Numbers(Require(kv, name + ".covariance", path), name + ".covariance", path);
    const auto count = Numbers(Require(kv, name + ".samples", path), name + ".samples", path);
    if (mean.size() != 3 || cov.size() != 9 || count.size() != 1)
      throw IoError(path.string() + ": wrong number of values for the " + name + " model");
    samples = static_cast<std::size_t>(count[0]);
    try {
      return ColorGaussian(Rgb(mean[0], mean[1], mean[2]), Eigen::Map<const Eigen::Matrix3d>(cov.data()));
    } catch (const Error& e) {
      throw IoError(path.string() + ": invalid " + name + " model: " + e.what());
    }
  };
  ColorModelFile model;
  model.models.foreground = read("foreground", model.foreground_samples);
  model.models.background = read("background", model.background_samples);
  return model;
}

void WriteTheta(const std::filesystem::path& path, const RigParams& theta) {
  std::ostringstream out;
  out << "format = " << kThetaFormat << '\n';
  out << "views = " << theta.ViewCount() << '\n';
  out << "yaw_rad = " << FormatDouble(theta.yaw) << '\n';
  out << "pitch_rad = " << FormatDouble(theta.pitch) << '\n';
  out << "trans_mm = " << FormatDouble(theta.trans) << '\n';
  out << "rolls_rad = " << Join(theta.rolls.data(), theta.rolls.size()) << '\n';
  WriteText(path, out.str(), std::ios::out | std::ios::trunc);
}

RigParams ReadTheta(const std::filesystem::path& path) {
  const auto kv = ReadKeyValues(path, kThetaFormat);
  auto scalar = [&](const std::string& key) {
    const auto v = Numbers(Require(kv, key, path), key, path);
    if (v.size() != 1) throw IoError(path.string() + ": expected one value for " + key);
    return v[0];
  };
  RigParams theta;
  const double views = scalar("views");
  theta.yaw = scalar("yaw_rad");
  theta.pitch = scalar("pitch_rad");
  theta.trans = scalar("trans_mm");
  theta.rolls = Numbers(Require(kv, "rolls_rad", path), "rolls_rad", path);
  if (views != static_cast<double>(theta.rolls.size() + 1))
    throw IoError(path.string() + ": views does not match the number of rolls");
  if (!theta.IsFinite()) throw IoError(path.string() + ": non-finite rig parameters");
  return theta;
}

void Report::Section(const std::string& name) {
  if (!body_.empty()) body_ += '\n';
  body_ += "[" + name + "]\n";
}

void Report::Add(const std::string& key, const std::string& value) { body_ += key + " = " + value + "\n"; }

void Report::Add(const std::string& key, double value) { Add(key, FormatDouble(value)); }

void Report::Add(const std::string& key, long long value) { Add(key, std::to_string(value)); }

void Report::AddText(const std::string& text) {
  body_ += text;
  if (!text.empty() && text.back() != '\n') body_ += '\n';
}

std::string Report::Payload() const { return "format = " + std::string(kReportFormat) + "\n\n" + body_; }

void WriteReport(const std::filesystem::path& path, const Report& report) {
  WriteText(path, "# written " + UtcTimestamp() + "\n" + report.Payload(), std::ios::out | std::ios::trunc);
}

void AppendReport(const std::filesystem::path& path, const Report& report) {
  if (!std::filesystem::exists(path)) {
    WriteReport(path, report);
    return;
  }
  const std::string payload = report.Payload();
  // Skip the format line: it is already present in the file.
  WriteText(path, "\n" + payload.substr(payload.find("\n\n") + 2), std::ios::out | std::ios::app);
}

std::string ReadReportPayload(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string header;
  std::getline(in, header);
  if (header.rfind("# written ", 0) != 0) throw IoError(path.string() + ": missing report header line");
  std::ostringstream rest;
  rest << in.rdbuf();
  return rest.str();
}

void EnsureDirectory(const std::filesystem::path& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

}  // namespace circcal
