#pragma once

// Locale-free number formatting and minimal CSV read/write.

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "error.hpp"

namespace lrcone::csv {

// shortest round-trip representation; infinities spelled "inf"
inline std::string format(double x)
{
  if (std::isnan(x))
    return "nan";
  if (std::isinf(x))
    return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string format(long v) { return std::to_string(v); }
inline std::string format(int v) { return std::to_string(v); }

inline double parse_double(std::string_view s)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  if (s == "inf" || s == "+inf" || s == "Infinity" || s == "infinity")
    return HUGE_VAL;
  if (s == "-inf")
    return -HUGE_VAL;
  if (!s.empty() && s.front() == '+')
    s.remove_prefix(1);
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    config_error("not a number: '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string> split(std::string_view line, char sep = ',')
{
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      std::string cell(line.substr(start, i - start));
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' '))
        cell.pop_back();
      while (!cell.empty() && cell.front() == ' ')
        cell.erase(cell.begin());
      out.push_back(std::move(cell));
      start = i + 1;
    }
  }
  return out;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(std::string_view name) const
  {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name)
        return static_cast<int>(i);
    return -1;
  }

  std::vector<std::string> values(std::string_view name) const
  {
    int c = column(name);
    if (c < 0)
      config_error("missing column '" + std::string(name) + "'");
    std::vector<std::string> out;
    for (const auto &r : rows)
      out.push_back(r.at(static_cast<std::size_t>(c)));
    return out;
  }
};

inline Table read(const std::string &path)
{
  std::ifstream in(path);
  if (!in)
    io_error("cannot open " + path);
  Table t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#')
      continue;
    if (first) {
      t.header = split(line);
      first = false;
    } else {
      t.rows.push_back(split(line));
    }
  }
  if (first)
    io_error("empty csv: " + path);
  return t;
}

// Buffers rows and writes them with '\n' line endings. flush() appends to disk
// so long sweeps keep completed rows if interrupted.
class Writer {
 public:
  explicit Writer(std::vector<std::string> header) : header_(std::move(header)) {}

  void row(const std::vector<std::string> &cells)
  {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i)
        buf_ << ',';
      buf_ << cells[i];
    }
    buf_ << '\n';
    ++rows_;
  }

  std::size_t rows() const { return rows_; }

  std::string str() const { return header_line() + buf_.str(); }

  void write(const std::string &path) const
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
      io_error("cannot write " + path);
    out << str();
    if (!out)
      io_error("write failed: " + path);
  }

  // incremental mode: header on open, then pending rows on each flush
  void open(const std::string &path)
  {
    path_ = path;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
      io_error("cannot write " + path);
    out << header_line();
  }
  void flush()
  {
    if (path_.empty())
      return;
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out)
      io_error("cannot append " + path_);
    out << buf_.str();
    buf_.str("");
  }

 private:
  std::string header_line() const
  {
    std::string s;
    for (std::size_t i = 0; i < header_.size(); ++i) {
      if (i)
        s += ',';
      s += header_[i];
    }
    return s + '\n';
  }

  std::vector<std::string> header_;
  std::ostringstream buf_;
  std::size_t rows_ = 0;
  std::string path_;
};

} // namespace lrcone::csv
