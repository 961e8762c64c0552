#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "htclt/ensembles.hpp"
#include "htclt/spectra.hpp"

namespace htclt {

enum class StatisticKind { Moment, Resolvent, Function };

/// What to extract from each replica. Moment orders K give Tr A^K, points z give
/// Tr G(z), a function id gives Σ f(λ_i).
struct Statistic {
  StatisticKind kind = StatisticKind::Moment;
  std::vector<int> orders;
  std::vector<cplx> points;
  std::string function_id;

  static Statistic moments(std::vector<int> orders);
  static Statistic resolvent(std::vector<cplx> points);
  static Statistic function(std::string id);

  /// Column names, e.g. "tr_A^4", "tr_G(0+2i)", "tr_f[cos]".
  std::vector<std::string> feature_names() const;
  bool is_complex() const noexcept { return kind == StatisticKind::Resolvent; }
};

/// Test functions available to Statistic::function.
std::vector<std::string> known_functions();
double evaluate_function(const std::string& id, double x);

struct ExperimentConfig {
  EnsembleSpec ensemble;
  std::vector<int> dims;
  int replicas = 2;
  Statistic statistic;
  std::uint64_t base_seed = 0;
  int threads = 0;  // 0: hardware concurrency
  std::string output_dir;

  /// Throws ConfigError or DomainError.
  void validate() const;
  /// Canonical text form; its SHA-256 is the config hash.
  std::string canonical() const;
  std::string hash() const;
};

std::string sha256_hex(std::string_view data);

/// Replicas of one dimension; rows[m][f], seed of row m = base seed + m.
struct SampleBlock {
  int N = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<cplx>> rows;

  std::vector<cplx> column(std::size_t f) const;
};

struct SampleTable {
  Statistic statistic;
  std::vector<std::string> features;
  std::vector<SampleBlock> blocks;
  std::string config_hash;

  const SampleBlock& block(int N) const;
};

/// M independent matrices per N, statistics extracted in parallel. The table is
/// identical for any thread count.
SampleTable run_replicas(const ExperimentConfig& cfg);

/// Writes the table as CSV: `# schema=1`, then N,replica,seed,<feature re/im columns>.
void write_sample_csv(std::ostream& os, const SampleTable& table);

struct GaussianityReport {
  std::size_t n = 0;
  std::string method;  // "standardized" or "lilliefors"
  double ks_statistic = 0.0;
  double p_value = 0.0;
  double fitted_variance = 0.0;
  double skewness = 0.0;
  double skewness_se = 0.0;
  double excess_kurtosis = 0.0;
  double excess_kurtosis_se = 0.0;
};

inline constexpr std::size_t kMinGaussianitySamples = 500;

/// KS test of centred samples against N(0, v). With a predicted v the samples
/// are standardised by √v; otherwise v is fitted and the p-value comes from a
/// parametric bootstrap of the fitted statistic.
GaussianityReport gaussianity_report(std::span<const double> samples,
                                     std::optional<double> predicted_variance,
                                     std::uint64_t seed = 0, int bootstrap = 500);

/// Asymptotic Kolmogorov p-value of √n·D with Stephens' small-sample correction.
double kolmogorov_pvalue(double d, std::size_t n);
/// sup |F_n − Φ| of the samples against the standard normal.
double ks_statistic_normal(std::vector<double> samples);

struct FeatureReport {
  std::string name;
  cplx mean;
  double mean_se_re = 0.0;
  double mean_se_im = 0.0;
  std::optional<GaussianityReport> re, im;
};

struct BlockReport {
  int N = 0;
  std::size_t replicas = 0;
  std::vector<FeatureReport> features;
  /// Real coordinates: one per real feature, Re and Im per complex one.
  std::vector<std::string> coordinates;
  std::vector<std::vector<double>> covariance;
  std::vector<std::vector<double>> covariance_se;
  /// E[Z_f Z_g] for complex features (equal to the covariance for real ones).
  std::vector<std::vector<cplx>> pseudo_covariance;
  std::vector<std::vector<double>> pseudo_covariance_se_re, pseudo_covariance_se_im;
};

struct StatReport {
  Normalization normalization = Normalization::SqrtN;
  std::vector<BlockReport> blocks;
  std::uint64_t base_seed = 0;
  std::string config_hash;
  int bootstrap = 0;
  std::string centering_note;
};

struct ReportOptions {
  Normalization normalization = Normalization::SqrtN;
  int bootstrap = 200;
  bool gaussianity = true;
  int gaussianity_bootstrap = 500;
  std::uint64_t seed = 0;
};

/// Centred statistics, covariance and pseudo-covariance with bootstrap errors,
/// and per-coordinate Gaussianity when M >= 500.
StatReport summarize(const SampleTable& table, const ReportOptions& opts = {});

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double ci_low = 0.0, ci_high = 0.0;
  std::vector<int> dims;
  std::vector<double> variances;
  bool spans_decade = false;
};

/// Least-squares slope of log Var(Tr statistic) against log N, with a
/// percentile bootstrap interval over replicas. Complex features use E|Z − EZ|².
ScalingFit variance_scaling(const SampleTable& table, std::size_t feature = 0,
                            int bootstrap = 200, std::uint64_t seed = 0);
ScalingFit variance_scaling(const ExperimentConfig& cfg, std::size_t feature = 0,
                            int bootstrap = 200);

/// (1/N) Σ_j Φ(t G(z)_jj) averaged over replicas with seeds seed + r.
std::vector<ComplexEstimate> empirical_rho(cplx z, std::span<const double> ts,
                                           const EnsembleSpec& spec, int N, int replicas,
                                           std::uint64_t seed);

/// (1/(N−1)) Σ_j Φ(t G_k(z)_jj + t' G'_k(z')_jj), k = round(uN) in [1, N], where
/// A'_k shares the leading (k−1)×(k−1) block of A_k and is independent elsewhere.
std::vector<ComplexEstimate> empirical_rho_pair(cplx z, cplx zp, double u,
                                                std::span<const std::pair<double, double>> tts,
                                                const EnsembleSpec& spec, int N,
                                                std::uint64_t seed, int replicas = 1);

}  // namespace htclt
