#ifndef NORMSOL_REPORT_HPP
#define NORMSOL_REPORT_HPP

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace normsol {

/// Lossless decimal form of a double.
inline std::string format_double(double v) {
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string &s) {
  if (s == "nan")
    return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf")
    return std::numeric_limits<double>::infinity();
  if (s == "-inf")
    return -std::numeric_limits<double>::infinity();
  // from_chars keeps subnormals that std::stod rejects as out of range.
  double v = 0.0;
  const char *end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec == std::errc::invalid_argument || s.empty())
    throw std::invalid_argument("not a number: '" + s + "'");
  if (ec == std::errc::result_out_of_range)
    throw std::out_of_range("number out of range: '" + s + "'");
  if (ptr != end)
    throw std::invalid_argument("trailing characters in number '" + s + "'");
  return v;
}

struct Check {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double bound = 0.0;
  double tolerance = 0.0;
  std::string note;
};

/// Named (x, y) series attached to a report, e.g. an energy gap as a function of R.
struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

struct VerificationReport {
  std::vector<Check> checks;
  std::vector<Series> series;

  bool all_pass() const noexcept {
    for (const auto &c : checks)
      if (!c.pass)
        return false;
    return true;
  }

  Check &add(std::string name, bool pass, double measured, double bound, double tolerance, std::string note = {}) {
    checks.push_back({std::move(name), pass, measured, bound, tolerance, std::move(note)});
    return checks.back();
  }

  void merge(const VerificationReport &other) {
    checks.insert(checks.end(), other.checks.begin(), other.checks.end());
    series.insert(series.end(), other.series.begin(), other.series.end());
  }

  const Check *find(const std::string &name) const noexcept {
    for (const auto &c : checks)
      if (c.name == name)
        return &c;
    return nullptr;
  }
};

// Text form, one record per check:
//
//   all_pass = false
//   [check]
//   name = decay_u1
//   measured = ...
//   ...
//   [series]
//   name = binding_gap
//   point = 4 0.0012
inline void write_report(std::ostream &os, const VerificationReport &r) {
  os << "all_pass = " << (r.all_pass() ? "true" : "false") << '\n';
  os << "checks = " << r.checks.size() << '\n';
  for (const auto &c : r.checks) {
    os << "\n[check]\n";
    os << "name = " << c.name << '\n';
    os << "measured = " << format_double(c.measured) << '\n';
    os << "bound = " << format_double(c.bound) << '\n';
    os << "tolerance = " << format_double(c.tolerance) << '\n';
    os << "pass = " << (c.pass ? "true" : "false") << '\n';
    if (!c.note.empty())
      os << "note = " << c.note << '\n';
  }
  for (const auto &s : r.series) {
    os << "\n[series]\n";
    os << "name = " << s.name << '\n';
    for (const auto &[x, y] : s.points)
      os << "point = " << format_double(x) << ' ' << format_double(y) << '\n';
  }
}

inline std::string to_text(const VerificationReport &r) {
  std::ostringstream os;
  write_report(os, r);
  return os.str();
}

inline VerificationReport read_report(std::istream &is) {
  VerificationReport r;
  enum { none, check, series } section = none;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty())
      continue;
    if (line == "[check]") {
      r.checks.emplace_back();
      section = check;
      continue;
    }
    if (line == "[series]") {
      r.series.emplace_back();
      section = series;
      continue;
    }
    const auto eq = line.find(" = ");
    if (eq == std::string::npos)
      throw std::invalid_argument("malformed report line: " + line);
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 3);
    if (section == check) {
      Check &c = r.checks.back();
      if (key == "name")
        c.name = value;
      else if (key == "measured")
        c.measured = parse_double(value);
      else if (key == "bound")
        c.bound = parse_double(value);
      else if (key == "tolerance")
        c.tolerance = parse_double(value);
      else if (key == "pass")
        c.pass = value == "true";
      else if (key == "note")
        c.note = value;
    } else if (section == series) {
      Series &s = r.series.back();
      if (key == "name") {
        s.name = value;
      } else if (key == "point") {
        const auto sp = value.find(' ');
        s.points.emplace_back(parse_double(value.substr(0, sp)), parse_double(value.substr(sp + 1)));
      }
    }
  }
  return r;
}

} // namespace normsol

#endif
