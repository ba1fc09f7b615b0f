#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include "fdw/errors.hpp"
#include "fdw/io.hpp"

namespace fdw {

namespace {

constexpr const char* kVersion = "fdw 1.0.0";

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

void append_double(std::string& out, double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, r.ptr);
}

}  // namespace

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw UsageError("cannot write " + path.string());
}

void write_trace_csv(const std::filesystem::path& path, const BoundaryTrace& trace) {
  trace.validate();
  std::string out = "t,left,right\n";
  out.reserve(out.size() + trace.size() * 72);
  for (std::size_t k = 0; k < trace.size(); ++k) {
    append_double(out, trace.times[k]);
    out += ',';
    append_double(out, trace.left[k]);
    out += ',';
    append_double(out, trace.right[k]);
    out += '\n';
  }
  write_text(path, out);
}

BoundaryTrace read_trace_csv(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::string_view rest = text;
  auto next_line = [&] {
    const auto nl = rest.find('\n');
    std::string_view line = rest.substr(0, nl);
    rest.remove_prefix(nl == std::string_view::npos ? rest.size() : nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
  };
  if (next_line() != "t,left,right") throw UsageError(path.string() + ": expected header 't,left,right'");

  BoundaryTrace trace;
  std::size_t row = 0;
  while (!rest.empty()) {
    const std::string_view line = next_line();
    ++row;
    if (line.empty() && rest.empty()) break;
    double v[3];
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (int f = 0; f < 3; ++f) {
      const auto r = std::from_chars(p, end, v[f]);
      const bool last = f == 2;
      if (r.ec != std::errc() || (last ? r.ptr != end : (r.ptr == end || *r.ptr != ',')))
        throw UsageError(path.string() + ": malformed row " + std::to_string(row) + ": '" + std::string(line) + "'");
      p = r.ptr + 1;
    }
    trace.times.push_back(v[0]);
    trace.left.push_back(v[1]);
    trace.right.push_back(v[2]);
  }
  return trace;
}

void write_table_csv(const std::filesystem::path& path, const Table& table) {
  std::string out;
  for (std::size_t c = 0; c < table.header.size(); ++c) out += (c ? "," : "") + table.header[c];
  out += '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw UsageError("table row width does not match its header");
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      append_double(out, row[c]);
    }
    out += '\n';
  }
  write_text(path, out);
}

void ResultBundle::metric(std::string name, double value) { metrics.emplace_back(std::move(name), format_double(value)); }

void ResultBundle::metric(std::string name, std::string value) { metrics.emplace_back(std::move(name), std::move(value)); }

void ResultBundle::write(const std::filesystem::path& dir) const {
  std::string run = "timestamp = " + timestamp + "\nconfig_hash = " + config_hash + "\nversion = " + version +
                    "\nseed = " + std::to_string(seed) + "\n";
  for (const auto& a : artifacts) run += "artifact = " + a + "\n";
  write_text(dir / "run.txt", run);
  std::string summary = "metric,value\n";
  for (const auto& [name, value] : metrics) summary += name + "," + value + "\n";
  write_text(dir / "summary.csv", summary);
}

ResultBundle make_bundle(const ExperimentConfig& config, std::uint64_t seed) {
  ResultBundle b;
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  b.timestamp = buf;
  b.config_hash = config_hash(config);
  b.version = kVersion;
  b.seed = seed;
  return b;
}

}  // namespace fdw
