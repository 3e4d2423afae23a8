#pragma once

// Shared plumbing: error type, seeded random sub-streams, small CSV helpers.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <locale>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace fwa {

enum class ErrorCode {
  InvalidArgument,
  Validation,
  Parse,
  Io,
  StarvedCpe,
  CriticalQueue,
  Infeasible,
  Divergence,
  InsufficientData,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

using Rng = std::mt19937_64;

// FNV-1a, used to derive named sub-stream seeds.
constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

// Every component draws from its own stream so that changing one consumer does
// not perturb the others.
inline Rng make_stream(std::uint64_t seed, std::string_view name) {
  const std::uint64_t tag = fnv1a(name);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32)};
  return Rng(seq);
}

inline Rng make_stream(std::uint64_t seed, std::string_view name, std::uint64_t index) {
  return make_stream(seed ^ (0x9E3779B97F4A7C15ull * (index + 1)), name);
}

inline bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

namespace csv {

// Fixed, locale-independent number formatting so output bytes only depend on values.
inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(10) << v;
  return os.str();
}

template <typename... Ts>
std::string row(const Ts&... cols) {
  std::string out;
  bool first = true;
  auto add = [&](const auto& c) {
    if (!first) out += ',';
    first = false;
    using C = std::decay_t<decltype(c)>;
    if constexpr (std::is_floating_point_v<C>) {
      out += num(static_cast<double>(c));
    } else if constexpr (std::is_integral_v<C>) {
      out += std::to_string(c);
    } else {
      out += std::string(c);
    }
  };
  (add(cols), ...);
  return out;
}

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline double to_double(const std::string& s, const std::string& ctx) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::Parse, ctx + ": not a number '" + s + "'");
  }
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  }
};

inline Table read(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::Io, "cannot open '" + path + "'");
  Table t;
  std::string line;
  bool have_header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto cols = split(line);
    if (!have_header) {
      t.header = std::move(cols);
      have_header = true;
      continue;
    }
    require(cols.size() == t.header.size(), ErrorCode::Parse,
            path + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                " columns, got " + std::to_string(cols.size()));
    t.rows.push_back(std::move(cols));
  }
  require(have_header, ErrorCode::Parse, path + ": missing header");
  return t;
}

class Writer {
 public:
  Writer(const std::string& path, const std::string& header) : out_(path, std::ios::binary) {
    require(out_.good(), ErrorCode::Io, "cannot write '" + path + "'");
    out_ << header << '\n';
  }
  void line(const std::string& s) { out_ << s << '\n'; }

 private:
  std::ofstream out_;
};

}  // namespace csv
}  // namespace fwa
