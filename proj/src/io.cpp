#include "ksat/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ksat {

using nlohmann::json;

void write_dimacs(const Formula& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw invalid_input("cannot open " + path + " for writing");
  out << "p cnf " << f.n() << ' ' << f.m() << '\n';
  for (int64_t c = 0; c < f.m(); ++c) {
    for (int j = 0; j < f.k(); ++j) {
      const int32_t lit = (f.var(c, j) + 1) * (f.sign(c, j) > 0 ? 1 : -1);
      out << lit << ' ';
    }
    out << "0\n";
  }
}

Formula read_dimacs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_input("cannot open " + path);
  std::string line;
  int n = -1;
  int64_t m = -1;
  std::vector<int32_t> vars;
  std::vector<int8_t> signs;
  int k = -1;
  std::vector<int32_t> clause;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == 'c') continue;
    if (line[0] == 'p') {
      std::istringstream hs(line);
      std::string p, cnf;
      hs >> p >> cnf >> n >> m;
      if (cnf != "cnf" || n < 0 || m < 0) throw invalid_input("bad DIMACS header");
      continue;
    }
    std::istringstream ls(line);
    int64_t lit;
    while (ls >> lit) {
      if (lit == 0) {
        if (k == -1)
          k = static_cast<int>(clause.size());
        else if (static_cast<int>(clause.size()) != k)
          throw invalid_input("clauses must share one length k");
        for (int32_t l : clause) {
          vars.push_back(std::abs(l) - 1);
          signs.push_back(l > 0 ? 1 : -1);
        }
        clause.clear();
      } else {
        if (std::abs(lit) > n) throw invalid_input("literal out of range");
        clause.push_back(static_cast<int32_t>(lit));
      }
    }
  }
  if (!clause.empty()) throw invalid_input("unterminated clause");
  if (n < 0) throw invalid_input("missing DIMACS header");
  if (k == -1) k = 3;  // empty formula: clause length is immaterial
  Formula f(n, k, std::move(vars), std::move(signs));
  if (f.m() != m) throw invalid_input("clause count disagrees with the header");
  return f;
}

std::string beta_to_string(double beta) {
  if (!std::isfinite(beta)) return "inf";
  std::ostringstream os;
  os.precision(17);
  os << beta;
  return os.str();
}

double beta_from_string(const std::string& s) {
  if (s == "inf" || s == "INF") return kBetaInf;
  return std::stod(s);
}

void write_formula_sidecar(const std::string& dimacs_path, const ModelParams& p, int n,
                           uint64_t seed) {
  json j;
  j["k"] = p.k;
  j["d"] = p.d;
  if (p.beta_finite())
    j["beta"] = p.beta;
  else
    j["beta"] = "inf";
  j["n"] = n;
  j["seed"] = seed;
  std::ofstream out(dimacs_path + ".json");
  if (!out) throw invalid_input("cannot open sidecar for writing");
  out << j.dump(2) << '\n';
}

void write_population(const Population& pop, const std::string& path, const ModelParams& p,
                      uint64_t seed, int64_t iteration) {
  static_assert(std::endian::native == std::endian::little,
                "population snapshots are little-endian");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw invalid_input("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(pop.samples.data()),
            static_cast<std::streamsize>(pop.samples.size() * sizeof(double)));

  json j;
  j["n"] = pop.size();
  j["k"] = p.k;
  j["d"] = p.d;
  if (p.beta_finite())
    j["beta"] = p.beta;
  else
    j["beta"] = "inf";
  j["seed"] = seed;
  j["iteration"] = iteration;
  std::ofstream hdr(path + ".json");
  if (!hdr) throw invalid_input("cannot open population header for writing");
  hdr << j.dump(2) << '\n';
}

Population read_population(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw invalid_input("cannot open " + path);
  const std::streamsize bytes = in.tellg();
  if (bytes % sizeof(double) != 0) throw invalid_input("population file size not a multiple of 8");
  in.seekg(0);
  Population pop;
  pop.samples.resize(static_cast<size_t>(bytes) / sizeof(double));
  in.read(reinterpret_cast<char*>(pop.samples.data()), bytes);
  if (!in) throw invalid_input("short read on population file");
  for (double x : pop.samples)
    if (!(x >= 0.0 && x <= 1.0)) throw invalid_input("population sample outside [0,1]");
  return pop;
}

}  // namespace ksat
