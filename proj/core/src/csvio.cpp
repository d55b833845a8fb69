#include "advntk/csvio.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>
#include <thread>

namespace advntk {

int worker_threads() {
  static const int n = [] {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (const char* env = std::getenv("ADVNTK_THREADS")) {
      const int cap = std::atoi(env);
      if (cap >= 1 && cap < hw) hw = cap;
    }
    return hw;
  }();
  return n;
}

void parallel_for(int n, const std::function<void(int)>& fn) {
  const int workers = std::min(worker_threads(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

std::uint64_t fnv1a64(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<double> geomspace(double start, double stop, int points) {
  if (points < 2 || !(start > 0.0) || !(stop > start))
    throw std::invalid_argument("geomspace: need points >= 2 and 0 < start < stop");
  std::vector<double> g(points);
  const double r = std::log(stop / start) / (points - 1);
  for (int i = 0; i < points; ++i) g[i] = start * std::exp(r * i);
  g.back() = stop;
  return g;
}

std::vector<double> linspace(double start, double stop, int points) {
  if (points < 2) throw std::invalid_argument("linspace: need points >= 2");
  std::vector<double> g(points);
  const double step = (stop - start) / (points - 1);
  for (int i = 0; i < points; ++i) g[i] = start + step * i;
  g.back() = stop;
  return g;
}

void atomic_write_file(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for write: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write: " + tmp.string());
  }
  fs::rename(tmp, target);
}

CsvWriter::CsvWriter(std::vector<std::string> columns, std::string config_hash)
    : columns_(std::move(columns)), config_hash_(std::move(config_hash)) {
  std::ostringstream header;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (i) header << ',';
    header << columns_[i];
  }
  header << ",config_hash\n";
  body_ = header.str();
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != columns_.size())
    throw std::invalid_argument("CsvWriter: column count mismatch");
  std::ostringstream line;
  line.precision(17);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) line << ',';
    line << values[i];
  }
  line << ',' << config_hash_ << '\n';
  body_ += line.str();
}

void CsvWriter::write(const std::string& path) const { atomic_write_file(path, body_); }

}  // namespace advntk
