#pragma once

#include <string>

#include "ksat/density.hpp"
#include "ksat/model.hpp"

namespace ksat {

// DIMACS CNF ("p cnf n m", 0-terminated clause lines, signed 1-based ids).
// Every clause must have exactly k literals with distinct variables.
void write_dimacs(const Formula& f, const std::string& path);
Formula read_dimacs(const std::string& path);

// JSON sidecar <path>.json carrying the generation parameters.
void write_formula_sidecar(const std::string& dimacs_path, const ModelParams& p, int n,
                           uint64_t seed);

// Population snapshot: raw little-endian f64 samples plus a JSON header in
// <path>.json with {n, k, d, beta, seed, iteration}.
void write_population(const Population& pop, const std::string& path, const ModelParams& p,
                      uint64_t seed, int64_t iteration);
Population read_population(const std::string& path);

// beta serialises as a number, or the string "inf" at beta = infinity
std::string beta_to_string(double beta);
double beta_from_string(const std::string& s);

}  // namespace ksat
