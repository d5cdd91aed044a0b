#pragma once

#include <cstdint>
#include <vector>

#include "socising/fk.hpp"
#include "socising/ising.hpp"
#include "socising/lattice.hpp"
#include "socising/rng.hpp"

namespace socising {

/// p_c(q) = √q / (1 + √q).
double critical_p(double q);
/// T_c = 2 / ln(1 + √2).
double critical_temperature();

/// p = 1 - e^{-2/T}, with p = 1 at T = 0. Rejects negative T.
double t_to_p(double temperature);
/// Inverse of t_to_p on (0, 1]; p = 1 maps to T = 0. Rejects p <= 0.
double p_to_t(double p);

/// φ_n(b): 1 if b = 0, else 1 - exp(-2 n^{2a} / b²). Rejects |b| > n².
double phi_n(long b, int n, double a);

/// p★ = q(1-p) / (p + q(1-p)).
double dual_parameter(double p, double q);

/// Colours the clusters of a wired configuration: + on M_n, one fair sign
/// per interior cluster (drawn in cluster id order).
SpinConfig es_fk_to_ising(const BondConfig& omega, RngStream& rng);

/// Opens each edge with equal spins at its endpoints with probability p,
/// in edge order; edges with opposite spins stay closed.
BondConfig es_ising_to_fk(const SpinConfig& sigma, double p, RngStream& rng);

/// ω★(e★) = 1 - ω(e) on Λ(n-1). Rejects n < 2.
BondConfig dual_config(const BondConfig& omega);
BondConfig dual_config(const BondConfig& omega, const DualGeometry& dual);

/// Exact law of es_fk_to_ising(ω) for ω ~ fk, signs marginalized
/// analytically. Indexed like PlusConfigTable masks of the same box.
std::vector<double> es_pushforward(const FKDistribution& fk);

/// Exact law of dual_config(ω) for ω ~ fk, indexed by dual edge mask.
std::vector<double> dual_pushforward(const FKDistribution& fk);

/// kernel[i][j] = P(σ' = config j | σ = config i) for the round trip
/// σ → es_ising_to_fk → es_fk_to_ising. Limited to boxes with at most
/// 16 edges.
std::vector<std::vector<double>> es_roundtrip_kernel(const PlusConfigTable& table, double p);

}  // namespace socising
