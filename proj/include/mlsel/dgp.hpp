#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "mlsel/dataset.hpp"

namespace mlsel {

enum class Family { Ordered, Multinomial };

/// Simulation design tag: ordered1..3 or mnl1..4.
struct DgpId {
    Family family = Family::Ordered;
    int number = 1;

    [[nodiscard]] std::string name() const;
    [[nodiscard]] int K() const noexcept
    {
        if (family == Family::Ordered) return number == 3 ? 3 : 2;
        return number == 1 ? 2 : 3;
    }
    static DgpId parse(std::string_view s);
};

struct SimDataset {
    Dataset data;
    DgpId dgp;
    std::uint64_t seed = 0;
    double delta = 1.0;

    std::vector<VectorXd> beta;  // true slopes, entry k-1 for category k
    VectorXd intercept;          // true outcome intercepts, entry k-1

    // Ordered designs.
    VectorXd index;       // h(x_i)
    VectorXd thresholds;  // c_1..c_K
    VectorXd sigma_rho;   // Cov(U, V_k), entry k-1

    // Multinomial designs.
    MatrixXd utility;  // n x (K+1), column 0 is zero
    MatrixXd probs;    // true choice probabilities; empty unless requested
};

/// Frozen utility-polynomial coefficients of the multinomial designs.
namespace mnl_constants {
// DGP1, basis (1, X, X^2, X^3, Z, Z^2, XZ).
inline constexpr double f1_dgp1[7] = {0.2, 0.6, -0.3, 0.2, 0.5, -0.3, 0.4};
inline constexpr double f2_dgp1[7] = {-0.1, -0.5, 0.2, 0.1, 0.8, -0.2, -0.3};
// DGP2-4, basis (1, X, Z, W, X^2, Z^2, W^2, XZ, XW, ZW).
inline constexpr double f_dgp234[3][10] = {
    {0.3, 0.8, -0.4, 0.3, -0.3, 0.2, -0.1, 0.3, -0.2, 0.1},
    {0.1, -0.5, 0.7, 0.4, 0.2, -0.3, 0.1, -0.2, 0.3, -0.2},
    {-0.2, 0.3, 0.4, -0.8, 0.1, 0.1, -0.3, 0.2, 0.1, 0.3},
};
inline constexpr double equicorrelation = 0.5;
inline constexpr double loadings[4] = {0.0, 0.3, 0.8, -0.5};
inline constexpr double sigma_eta = 0.2;
}  // namespace mnl_constants

/// Engine seeded from a 64-bit seed through std::seed_seq.
std::mt19937_64 make_engine(std::uint64_t seed);

/// Alternative-specific shocks (eps_0..eps_K) of a multinomial design.
VectorXd draw_mnl_shocks(int dgp, int K, std::mt19937_64& eng);

SimDataset generate_ordered(int dgp, Index n, std::uint64_t seed, double delta = 1.0);
SimDataset generate_multinomial(int dgp, Index n, std::uint64_t seed, bool with_probs = false);
SimDataset generate(const DgpId& id, Index n, std::uint64_t seed, double delta = 1.0,
                    bool with_probs = false);

/// True choice probabilities of DGP3 (equicorrelated normal) or DGP4 (one
/// factor) at utilities (0, f_1, ..., f_K), by Gauss-Hermite quadrature.
VectorXd probit_probs(int dgp, const VectorXd& f);

/// Infeasible controls for observations with D = k, in row order of rows_in(k).
/// Ordered: one column sigma_k rho_k times the truncated-normal mean.
/// Multinomial DGP1/2: the true inclusive value. DGP3/4: true (p_1..p_K).
MatrixXd oracle_controls(const SimDataset& ds, int k);

}  // namespace mlsel
