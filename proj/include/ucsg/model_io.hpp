#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ucsg/errors.hpp"
#include "ucsg/sg_model.hpp"

namespace ucsg {

namespace detail {

inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace detail

/**
 * Text form of a model, versioned and diff-friendly:
 *
 *   ucsg-sg v1
 *   states <S>
 *   actions <A1> <A2>
 *   cell <s> <a1> <a2>        (in lexicographic order)
 *   r <reward>
 *   p <p(0)> ... <p(S-1)>
 *
 * Reals use 17 significant digits, so save/load round-trips bit-exact.
 */
inline std::string serialize_model(const SGModel& m) {
  std::ostringstream out;
  out << "ucsg-sg v1\n";
  out << "states " << m.S << "\n";
  out << "actions " << m.A1 << " " << m.A2 << "\n";
  for (int s = 0; s < m.S; ++s)
    for (int a1 = 0; a1 < m.A1; ++a1)
      for (int a2 = 0; a2 < m.A2; ++a2) {
        out << "cell " << s << " " << a1 << " " << a2 << "\n";
        out << "r " << detail::fmt17(m.r(s, a1, a2)) << "\n";
        const double* row = m.row(s, a1, a2);
        out << "p";
        for (int t = 0; t < m.S; ++t) out << " " << detail::fmt17(row[t]);
        out << "\n";
      }
  return out.str();
}

inline SGModel parse_model(const std::string& text, double tol = 1e-9) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto next_line = [&](const char* what) {
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return;
    }
    throw ParseError("line " + std::to_string(lineno + 1) +
                     ": unexpected end of file, expected " + what);
  };
  auto fail = [&](const std::string& why) -> ParseError {
    return ParseError("line " + std::to_string(lineno) + ": " + why);
  };

  next_line("header");
  if (line != "ucsg-sg v1") throw fail("unrecognized header '" + line + "'");

  SGModel m;
  {
    next_line("states");
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key >> m.S) || key != "states" || m.S < 1)
      throw fail("expected 'states <n>'");
  }
  {
    next_line("actions");
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key >> m.A1 >> m.A2) || key != "actions" || m.A1 < 1 ||
        m.A2 < 1)
      throw fail("expected 'actions <A1> <A2>'");
  }
  m = SGModel(m.S, m.A1, m.A2);
  for (int s = 0; s < m.S; ++s)
    for (int a1 = 0; a1 < m.A1; ++a1)
      for (int a2 = 0; a2 < m.A2; ++a2) {
        const std::string want = "cell " + std::to_string(s) + " " +
                                 std::to_string(a1) + " " + std::to_string(a2);
        next_line(want.c_str());
        if (line != want) throw fail("expected '" + want + "', got '" + line + "'");
        {
          next_line("r");
          std::istringstream ls(line);
          std::string key;
          if (!(ls >> key >> m.r(s, a1, a2)) || key != "r")
            throw fail("expected 'r <reward>' for " + want);
        }
        {
          next_line("p");
          std::istringstream ls(line);
          std::string key;
          ls >> key;
          if (key != "p") throw fail("expected 'p <row>' for " + want);
          double* row = m.row(s, a1, a2);
          for (int t = 0; t < m.S; ++t)
            if (!(ls >> row[t]))
              throw fail("kernel row needs " + std::to_string(m.S) +
                         " entries for " + want);
          double extra;
          if (ls >> extra)
            throw fail("kernel row has more than " + std::to_string(m.S) +
                       " entries for " + want);
        }
      }
  m.validate(tol);
  return m;
}

inline void save_model(const SGModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  out << serialize_model(m);
  if (!out) throw ParseError("failed writing '" + path + "'");
}

inline SGModel load_model(const std::string& path, double tol = 1e-9) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str(), tol);
}

}  // namespace ucsg
