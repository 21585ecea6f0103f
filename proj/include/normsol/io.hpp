#ifndef NORMSOL_IO_HPP
#define NORMSOL_IO_HPP

#include "normsol/energy.hpp"
#include "normsol/report.hpp"
#include "normsol/solver.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace normsol {

inline void write_energy(std::ostream &os, const EnergyBreakdown &e, const std::string &prefix = "energy.") {
  os << prefix << "kinetic1 = " << format_double(e.kinetic1) << '\n';
  os << prefix << "kinetic2 = " << format_double(e.kinetic2) << '\n';
  os << prefix << "potential1 = " << format_double(e.potential1) << '\n';
  os << prefix << "potential2 = " << format_double(e.potential2) << '\n';
  os << prefix << "interaction = " << format_double(e.interaction) << '\n';
  os << prefix << "total_J = " << format_double(e.total_J) << '\n';
  os << prefix << "total_I = " << format_double(e.total_I) << '\n';
}

inline void write_summary(std::ostream &os, const SolveResult &r) {
  os << "converged = " << (r.converged ? "true" : "false") << '\n';
  os << "message = " << r.message << '\n';
  os << "iterations = " << r.iterations << '\n';
  os << "a1 = " << format_double(r.masses[0]) << '\n';
  os << "a2 = " << format_double(r.masses[1]) << '\n';
  os << "mass1 = " << format_double(mass(r.u1)) << '\n';
  os << "mass2 = " << format_double(mass(r.u2)) << '\n';
  os << "lambda1 = " << format_double(r.lambda1) << '\n';
  os << "lambda2 = " << format_double(r.lambda2) << '\n';
  os << "residual = " << format_double(r.residual) << '\n';
  os << "potential_free = " << (r.potential_free ? "true" : "false") << '\n';
  // C when potentials are present, E when both vanish.
  os << (r.potential_free ? "E" : "C") << " = " << format_double(r.energy.total_J) << '\n';
  write_energy(os, r.energy);
}

inline void write_history_csv(std::ostream &os, const std::vector<HistoryEntry> &h) {
  os << "iteration,energy,residual\n";
  for (const auto &e : h)
    os << e.iteration << ',' << format_double(e.energy) << ',' << format_double(e.residual) << '\n';
}

/// Flat "key = value" records, as written by write_summary.
inline std::map<std::string, std::string> read_key_values(std::istream &is) {
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos)
      out[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return out;
}

inline std::map<std::string, std::string> read_key_values(const std::filesystem::path &p) {
  std::ifstream is(p);
  if (!is)
    throw std::runtime_error("cannot open " + p.string());
  return read_key_values(is);
}

/// Comma-separated table with a header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string &name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name)
        return i;
    throw std::out_of_range("no column " + name);
  }
};

inline CsvTable read_csv(std::istream &is) {
  CsvTable t;
  std::string line;
  auto split = [](const std::string &s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ','))
      cells.push_back(cell);
    return cells;
  };
  if (std::getline(is, line))
    t.header = split(line);
  while (std::getline(is, line))
    if (!line.empty())
      t.rows.push_back(split(line));
  return t;
}

inline CsvTable read_csv(const std::filesystem::path &p) {
  std::ifstream is(p);
  if (!is)
    throw std::runtime_error("cannot open " + p.string());
  return read_csv(is);
}

} // namespace normsol

#endif
