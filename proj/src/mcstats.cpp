#include "htclt/mcstats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#include "htclt/errors.hpp"
#include "htclt/numerics.hpp"

namespace htclt {

namespace {

// Second matrix of the coupled pair; far from any replica offset.
constexpr std::uint64_t kCouplingSeedOffset = 0x9E3779B97F4A7C15ULL;

// Up to this order two matrix products are cheaper than diagonalising.
constexpr int kProductPathMaxOrder = 6;

std::string format_point(cplx z) {
  std::ostringstream os;
  os << z.real() << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag()) << 'i';
  return os.str();
}

double sample_variance(std::span<const double> xs) {
  const double m = mean_of<double>(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Population skewness and excess kurtosis from power sums of (already centred) data.
std::pair<double, double> shape_from_sums(double s1, double s2, double s3, double s4, double n) {
  const double m = s1 / n;
  const double m2 = s2 / n - m * m;
  const double m3 = s3 / n - 3.0 * m * s2 / n + 2.0 * m * m * m;
  const double m4 = s4 / n - 4.0 * m * s3 / n + 6.0 * m * m * s2 / n - 3.0 * m * m * m * m;
  return {m3 / std::pow(m2, 1.5), m4 / (m2 * m2) - 3.0};
}

std::size_t worker_count(int requested, std::size_t jobs) {
  std::size_t n = requested > 0 ? static_cast<std::size_t>(requested)
                                : std::max(1U, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(n, jobs));
}

// Runs job(i) for i in [0, count) on a small pool; rethrows the first failure.
template <typename Job>
void parallel_for(std::size_t count, int threads, Job&& job) {
  const std::size_t workers = worker_count(threads, count);
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            job(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = count;
          }
        }
      });
  }
  if (failure) std::rethrow_exception(failure);
}

ComplexEstimate estimate_of(const std::vector<cplx>& values) {
  std::vector<double> re, im;
  for (cplx v : values) {
    re.push_back(v.real());
    im.push_back(v.imag());
  }
  return {{mean_of<double>(re), mean_of<double>(im)}, jackknife_se_mean(re),
          jackknife_se_mean(im)};
}

void require_sign(cplx z, double t, const char* who) {
  if (z.imag() == 0.0) throw DomainError(std::string(who) + ": z must be off the real axis");
  if (t * z.imag() < 0.0) throw DomainError(std::string(who) + ": requires t·Im z >= 0");
}

cplx phi_average(const EnsembleSpec& spec, const std::vector<cplx>& g, double t,
                 const std::vector<cplx>* gp = nullptr, double tp = 0.0) {
  if (t == 0.0 && (gp == nullptr || tp == 0.0)) return 0.0;
  std::vector<cplx> terms;
  terms.reserve(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) {
    cplx lambda = t * g[j];
    if (gp != nullptr) lambda += tp * (*gp)[j];
    terms.push_back(phi_limit(spec, lambda));
  }
  return mean_of<cplx>(terms);
}

}  // namespace

Statistic Statistic::moments(std::vector<int> orders) {
  Statistic s;
  s.kind = StatisticKind::Moment;
  s.orders = std::move(orders);
  return s;
}

Statistic Statistic::resolvent(std::vector<cplx> points) {
  Statistic s;
  s.kind = StatisticKind::Resolvent;
  s.points = std::move(points);
  return s;
}

Statistic Statistic::function(std::string id) {
  Statistic s;
  s.kind = StatisticKind::Function;
  s.function_id = std::move(id);
  return s;
}

std::vector<std::string> Statistic::feature_names() const {
  std::vector<std::string> out;
  switch (kind) {
    case StatisticKind::Moment:
      for (int k : orders) out.push_back("tr_A^" + std::to_string(k));
      break;
    case StatisticKind::Resolvent:
      for (cplx z : points) out.push_back("tr_G(" + format_point(z) + ")");
      break;
    case StatisticKind::Function:
      out.push_back("tr_f[" + function_id + "]");
      break;
  }
  return out;
}

std::vector<std::string> known_functions() { return {"cos", "arctan", "gauss", "sech"}; }

double evaluate_function(const std::string& id, double x) {
  if (id == "cos") return std::cos(x);
  if (id == "arctan") return std::atan(x);
  if (id == "gauss") return std::exp(-x * x);
  if (id == "sech") return 1.0 / std::cosh(x);
  throw ConfigError("unknown function id '" + id + "'");
}

void ExperimentConfig::validate() const {
  ensemble.validate();
  if (dims.empty()) throw ConfigError("experiment: at least one N is required");
  for (int N : dims) {
    if (N < 2) throw ConfigError("experiment: N must be at least 2");
    if (N > kMaxDimension) throw CapacityError("experiment: N exceeds " + std::to_string(kMaxDimension));
    ensemble.validate_dimension(N);
  }
  if (replicas < 2) throw ConfigError("experiment: M must be at least 2");
  if (threads < 0) throw ConfigError("experiment: threads must be non-negative");
  switch (statistic.kind) {
    case StatisticKind::Moment:
      if (statistic.orders.empty()) throw ConfigError("experiment: no moment orders given");
      for (int k : statistic.orders)
        if (k < 1 || k > 12) throw ConfigError("experiment: moment orders must lie in [1, 12]");
      break;
    case StatisticKind::Resolvent:
      if (statistic.points.empty()) throw ConfigError("experiment: no resolvent points given");
      for (cplx z : statistic.points)
        if (z.imag() == 0.0) throw DomainError("experiment: z must be off the real axis");
      break;
    case StatisticKind::Function: {
      const auto ids = known_functions();
      if (std::find(ids.begin(), ids.end(), statistic.function_id) == ids.end())
        throw ConfigError("experiment: unknown function id '" + statistic.function_id + "'");
      break;
    }
  }
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "family=" << to_string(ensemble.family) << '\n';
  switch (ensemble.family) {
    case Family::Levy:
      os << "alpha=" << ensemble.alpha << '\n';
      break;
    case Family::ErdosRenyi:
      os << "p=" << ensemble.p << '\n';
      break;
    case Family::ExplodingMoments:
      for (const Atom& a : ensemble.moment_measure) os << "atom=" << a.x << ':' << a.w << '\n';
      break;
    case Family::StandardWigner:
      os << "entry_law=" << (ensemble.entry_law == EntryLaw::Gaussian ? "gaussian" : "rademacher")
         << '\n';
      break;
  }
  os << "recenter=" << ensemble.recenter << '\n';
  os << "diagonal=" << (ensemble.diagonal == DiagonalPolicy::Zero ? "zero" : "same") << '\n';
  os << "dims=";
  for (std::size_t i = 0; i < dims.size(); ++i) os << (i ? "," : "") << dims[i];
  os << "\nreplicas=" << replicas << '\n';
  os << "statistic=";
  for (const std::string& f : statistic.feature_names()) os << f << ';';
  os << "\nseed=" << base_seed << '\n';
  return os.str();
}

std::string ExperimentConfig::hash() const { return sha256_hex(canonical()); }

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i)
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

std::vector<cplx> SampleBlock::column(std::size_t f) const {
  std::vector<cplx> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.at(f));
  return out;
}

const SampleBlock& SampleTable::block(int N) const {
  for (const SampleBlock& b : blocks)
    if (b.N == N) return b;
  throw DomainError("sample table has no block for N=" + std::to_string(N));
}

SampleTable run_replicas(const ExperimentConfig& cfg) {
  cfg.validate();
  SampleTable table;
  table.statistic = cfg.statistic;
  table.features = cfg.statistic.feature_names();
  table.config_hash = cfg.hash();
  const Statistic& st = cfg.statistic;
  const auto M = static_cast<std::size_t>(cfg.replicas);

  for (int N : cfg.dims) {
    SampleBlock block;
    block.N = N;
    block.rows.resize(M);
    for (std::size_t m = 0; m < M; ++m) block.seeds.push_back(cfg.base_seed + m);
    parallel_for(M, cfg.threads, [&](std::size_t m) {
      const SymmetricMatrix a = sample_matrix(cfg.ensemble, N, block.seeds[m]);
      std::vector<cplx>& row = block.rows[m];
      if (st.kind == StatisticKind::Moment) {
        const int top = *std::max_element(st.orders.begin(), st.orders.end());
        const TracePath path =
            top <= kProductPathMaxOrder ? TracePath::Multiplication : TracePath::Eigenvalues;
        for (double v : trace_powers(a, st.orders, path)) row.emplace_back(v);
        return;
      }
      const SpectralSample s(a);
      switch (st.kind) {
        case StatisticKind::Moment:
          break;
        case StatisticKind::Resolvent:
          for (cplx z : st.points) row.push_back(s.trace_resolvent(z));
          break;
        case StatisticKind::Function:
          row.emplace_back(
              s.trace_function([&](double x) { return evaluate_function(st.function_id, x); }));
          break;
      }
    });
    table.blocks.push_back(std::move(block));
  }
  return table;
}

void write_sample_csv(std::ostream& os, const SampleTable& table) {
  const bool cx = table.statistic.is_complex();
  os << "# schema=1\n";
  os << "N,replica,seed";
  for (const std::string& f : table.features) {
    if (cx)
      os << ",re_" << f << ",im_" << f;
    else
      os << ',' << f;
  }
  os << '\n';
  os << std::setprecision(17);
  for (const SampleBlock& b : table.blocks)
    for (std::size_t m = 0; m < b.rows.size(); ++m) {
      os << b.N << ',' << m << ',' << b.seeds[m];
      for (cplx v : b.rows[m]) {
        os << ',' << v.real();
        if (cx) os << ',' << v.imag();
      }
      os << '\n';
    }
}

double kolmogorov_pvalue(double d, std::size_t n) {
  const double en = std::sqrt(static_cast<double>(n));
  const double lambda = (en + 0.12 + 0.11 / en) * d;
  if (lambda <= 0.0) return 1.0;
  double q = 0.0;
  if (lambda < 1.18) {
    // theta-function form converges fast for small arguments
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double s = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double j = 2.0 * k - 1.0;
      s += std::exp(-j * j * pi2 / (8.0 * lambda * lambda));
    }
    q = 1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * s;
  } else {
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
      q += sign * std::exp(-2.0 * k * k * lambda * lambda);
      sign = -sign;
    }
    q *= 2.0;
  }
  return std::clamp(q, 0.0, 1.0);
}

double ks_statistic_normal(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = normal_cdf(samples[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

GaussianityReport gaussianity_report(std::span<const double> samples,
                                     std::optional<double> predicted_variance, std::uint64_t seed,
                                     int bootstrap) {
  if (samples.size() < kMinGaussianitySamples)
    throw ConfigError("gaussianity_report: need at least " +
                      std::to_string(kMinGaussianitySamples) + " samples, got " +
                      std::to_string(samples.size()));
  GaussianityReport r;
  r.n = samples.size();
  const double n = static_cast<double>(r.n);
  const double mean = mean_of<double>(samples);
  r.fitted_variance = sample_variance(samples);

  if (predicted_variance) {
    const double v = *predicted_variance;
    if (!(v > 0.0) || !std::isfinite(v))
      throw DomainError("gaussianity_report: predicted variance must be positive, got " +
                        std::to_string(v));
    r.method = "standardized";
    std::vector<double> z(samples.begin(), samples.end());
    for (double& x : z) x /= std::sqrt(v);
    r.ks_statistic = ks_statistic_normal(std::move(z));
    r.p_value = kolmogorov_pvalue(r.ks_statistic, r.n);
  } else {
    if (!(r.fitted_variance > 0.0))
      throw DomainError("gaussianity_report: samples have zero variance");
    if (bootstrap < 1) throw ConfigError("gaussianity_report: bootstrap must be positive");
    r.method = "lilliefors";
    auto fitted_ks = [](std::vector<double> xs) {
      const double m = mean_of<double>(xs);
      const double s = std::sqrt(sample_variance(xs));
      for (double& x : xs) x = (x - m) / s;
      return ks_statistic_normal(std::move(xs));
    };
    r.ks_statistic = fitted_ks({samples.begin(), samples.end()});
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    int exceed = 0;
    std::vector<double> draw(r.n);
    for (int b = 0; b < bootstrap; ++b) {
      for (double& x : draw) x = normal(rng);
      if (fitted_ks(draw) >= r.ks_statistic) ++exceed;
    }
    r.p_value = (exceed + 1.0) / (bootstrap + 1.0);
  }

  double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
  for (double x : samples) {
    const double c = x - mean;
    s1 += c;
    s2 += c * c;
    s3 += c * c * c;
    s4 += c * c * c * c;
  }
  std::tie(r.skewness, r.excess_kurtosis) = shape_from_sums(s1, s2, s3, s4, n);
  std::vector<double> skew_loo, kurt_loo;
  skew_loo.reserve(r.n);
  kurt_loo.reserve(r.n);
  for (double x : samples) {
    const double c = x - mean;
    const auto [sk, ku] = shape_from_sums(s1 - c, s2 - c * c, s3 - c * c * c, s4 - c * c * c * c,
                                          n - 1.0);
    skew_loo.push_back(sk);
    kurt_loo.push_back(ku);
  }
  auto jackknife = [n](const std::vector<double>& v) {
    const double m = mean_of<double>(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt((n - 1.0) / n * ss);
  };
  r.skewness_se = jackknife(skew_loo);
  r.excess_kurtosis_se = jackknife(kurt_loo);
  return r;
}

StatReport summarize(const SampleTable& table, const ReportOptions& opts) {
  StatReport report;
  report.normalization = opts.normalization;
  report.config_hash = table.config_hash;
  report.bootstrap = opts.bootstrap;
  report.base_seed = table.blocks.empty() || table.blocks[0].seeds.empty()
                         ? 0
                         : table.blocks[0].seeds[0];
  report.centering_note =
      "centred by the sample mean; the variance estimate carries an O(1/M) bias";
  const bool cx = table.statistic.is_complex();
  const std::size_t F = table.features.size();

  for (const SampleBlock& b : table.blocks) {
    const std::size_t M = b.rows.size();
    if (M < 2) throw ConfigError("summarize: need at least 2 replicas");
    BlockReport br;
    br.N = b.N;
    br.replicas = M;

    // centred, normalised features z[f][m]
    std::vector<std::vector<cplx>> z(F);
    for (std::size_t f = 0; f < F; ++f) {
      const std::vector<cplx> col = b.column(f);
      z[f] = centered_statistic(std::span<const cplx>(col), opts.normalization, b.N);
      FeatureReport fr;
      fr.name = table.features[f];
      const ComplexEstimate e = estimate_of(col);
      fr.mean = e.value;
      fr.mean_se_re = e.se_re;
      fr.mean_se_im = e.se_im;
      br.features.push_back(std::move(fr));
    }

    std::vector<std::vector<double>> coords;
    for (std::size_t f = 0; f < F; ++f) {
      std::vector<double> re, im;
      for (cplx v : z[f]) {
        re.push_back(v.real());
        im.push_back(v.imag());
      }
      br.coordinates.push_back(cx ? "re_" + table.features[f] : table.features[f]);
      coords.push_back(std::move(re));
      if (cx) {
        br.coordinates.push_back("im_" + table.features[f]);
        coords.push_back(std::move(im));
      }
    }
    const std::size_t D = coords.size();

    auto cov_of = [&](const std::vector<std::size_t>& idx) {
      const double m = static_cast<double>(idx.size());
      std::vector<double> mu(D, 0.0);
      for (std::size_t d = 0; d < D; ++d) {
        for (std::size_t i : idx) mu[d] += coords[d][i];
        mu[d] /= m;
      }
      std::vector<std::vector<double>> c(D, std::vector<double>(D, 0.0));
      for (std::size_t a = 0; a < D; ++a)
        for (std::size_t bb = a; bb < D; ++bb) {
          double s = 0.0;
          for (std::size_t i : idx) s += (coords[a][i] - mu[a]) * (coords[bb][i] - mu[bb]);
          c[a][bb] = c[bb][a] = s / (m - 1.0);
        }
      return c;
    };
    auto pseudo_of = [&](const std::vector<std::size_t>& idx) {
      const double m = static_cast<double>(idx.size());
      std::vector<cplx> mu(F, 0.0);
      for (std::size_t f = 0; f < F; ++f) {
        for (std::size_t i : idx) mu[f] += z[f][i];
        mu[f] /= m;
      }
      std::vector<std::vector<cplx>> c(F, std::vector<cplx>(F, 0.0));
      for (std::size_t a = 0; a < F; ++a)
        for (std::size_t bb = a; bb < F; ++bb) {
          cplx s = 0.0;
          for (std::size_t i : idx) s += (z[a][i] - mu[a]) * (z[bb][i] - mu[bb]);
          c[a][bb] = c[bb][a] = s / (m - 1.0);
        }
      return c;
    };

    std::vector<std::size_t> all(M);
    for (std::size_t i = 0; i < M; ++i) all[i] = i;
    br.covariance = cov_of(all);
    br.pseudo_covariance = pseudo_of(all);

    br.covariance_se.assign(D, std::vector<double>(D, 0.0));
    br.pseudo_covariance_se_re.assign(F, std::vector<double>(F, 0.0));
    br.pseudo_covariance_se_im.assign(F, std::vector<double>(F, 0.0));
    if (opts.bootstrap > 1) {
      std::mt19937_64 rng(opts.seed + static_cast<std::uint64_t>(b.N));
      std::vector<std::vector<double>> s1(D, std::vector<double>(D, 0.0)), s2 = s1;
      std::vector<std::vector<cplx>> p1(F, std::vector<cplx>(F, 0.0));
      std::vector<std::vector<double>> p2re(F, std::vector<double>(F, 0.0)), p2im = p2re;
      std::vector<std::size_t> idx(M);
      for (int r = 0; r < opts.bootstrap; ++r) {
        for (std::size_t& i : idx) i = static_cast<std::size_t>(rng() % M);
        const auto c = cov_of(idx);
        const auto p = pseudo_of(idx);
        for (std::size_t a = 0; a < D; ++a)
          for (std::size_t bb = 0; bb < D; ++bb) {
            s1[a][bb] += c[a][bb];
            s2[a][bb] += c[a][bb] * c[a][bb];
          }
        for (std::size_t a = 0; a < F; ++a)
          for (std::size_t bb = 0; bb < F; ++bb) {
            p1[a][bb] += p[a][bb];
            p2re[a][bb] += p[a][bb].real() * p[a][bb].real();
            p2im[a][bb] += p[a][bb].imag() * p[a][bb].imag();
          }
      }
      const double B = opts.bootstrap;
      auto sd = [B](double sum, double sq) {
        return std::sqrt(std::max(0.0, (sq - sum * sum / B) / (B - 1.0)));
      };
      for (std::size_t a = 0; a < D; ++a)
        for (std::size_t bb = 0; bb < D; ++bb) br.covariance_se[a][bb] = sd(s1[a][bb], s2[a][bb]);
      for (std::size_t a = 0; a < F; ++a)
        for (std::size_t bb = 0; bb < F; ++bb) {
          br.pseudo_covariance_se_re[a][bb] = sd(p1[a][bb].real(), p2re[a][bb]);
          br.pseudo_covariance_se_im[a][bb] = sd(p1[a][bb].imag(), p2im[a][bb]);
        }
    }

    if (opts.gaussianity && M >= kMinGaussianitySamples) {
      for (std::size_t f = 0; f < F; ++f) {
        const std::size_t d = cx ? 2 * f : f;
        if (br.covariance[d][d] > 0.0)
          br.features[f].re = gaussianity_report(coords[d], std::nullopt, opts.seed + d,
                                                 opts.gaussianity_bootstrap);
        if (cx && br.covariance[d + 1][d + 1] > 0.0)
          br.features[f].im = gaussianity_report(coords[d + 1], std::nullopt, opts.seed + d + 1,
                                                 opts.gaussianity_bootstrap);
      }
    }
    report.blocks.push_back(std::move(br));
  }
  return report;
}

ScalingFit variance_scaling(const SampleTable& table, std::size_t feature, int bootstrap,
                            std::uint64_t seed) {
  if (table.blocks.size() < 3) throw ConfigError("variance_scaling: need at least 3 values of N");
  if (feature >= table.features.size()) throw DomainError("variance_scaling: no such feature");
  ScalingFit fit;

  auto variance = [](const std::vector<cplx>& col, const std::vector<std::size_t>& idx) {
    const double m = static_cast<double>(idx.size());
    cplx mu = 0.0;
    for (std::size_t i : idx) mu += col[i];
    mu /= m;
    double s = 0.0;
    for (std::size_t i : idx) s += std::norm(col[i] - mu);
    return s / (m - 1.0);
  };
  auto slope_of = [](const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      mx += x[i];
      my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sxy += (x[i] - mx) * (y[i] - my);
      sxx += (x[i] - mx) * (x[i] - mx);
    }
    const double slope = sxy / sxx;
    return std::pair{slope, my - slope * mx};
  };

  std::vector<std::vector<cplx>> cols;
  std::vector<double> logn, logv;
  for (const SampleBlock& b : table.blocks) {
    cols.push_back(b.column(feature));
    std::vector<std::size_t> all(b.rows.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const double v = variance(cols.back(), all);
    if (!(v > 0.0))
      throw DomainError("variance_scaling: degenerate variance at N=" + std::to_string(b.N));
    fit.dims.push_back(b.N);
    fit.variances.push_back(v);
    logn.push_back(std::log(static_cast<double>(b.N)));
    logv.push_back(std::log(v));
  }
  std::tie(fit.slope, fit.intercept) = slope_of(logn, logv);
  const auto [lo, hi] = std::minmax_element(fit.dims.begin(), fit.dims.end());
  fit.spans_decade = *hi >= 10 * *lo;

  fit.ci_low = fit.ci_high = fit.slope;
  if (bootstrap > 1) {
    std::mt19937_64 rng(seed);
    std::vector<double> slopes;
    for (int r = 0; r < bootstrap; ++r) {
      std::vector<double> lv;
      for (const auto& col : cols) {
        std::vector<std::size_t> idx(col.size());
        for (std::size_t& i : idx) i = static_cast<std::size_t>(rng() % col.size());
        lv.push_back(std::log(std::max(variance(col, idx), 1e-300)));
      }
      slopes.push_back(slope_of(logn, lv).first);
    }
    std::sort(slopes.begin(), slopes.end());
    fit.ci_low = slopes[static_cast<std::size_t>(0.025 * (slopes.size() - 1))];
    fit.ci_high = slopes[static_cast<std::size_t>(0.975 * (slopes.size() - 1))];
  }
  return fit;
}

ScalingFit variance_scaling(const ExperimentConfig& cfg, std::size_t feature, int bootstrap) {
  return variance_scaling(run_replicas(cfg), feature, bootstrap, cfg.base_seed);
}

std::vector<ComplexEstimate> empirical_rho(cplx z, std::span<const double> ts,
                                           const EnsembleSpec& spec, int N, int replicas,
                                           std::uint64_t seed) {
  for (double t : ts) require_sign(z, t, "empirical_rho");
  if (replicas < 1) throw ConfigError("empirical_rho: need at least one replica");
  if (N < 2) throw ConfigError("empirical_rho: N must be at least 2");
  std::vector<std::vector<cplx>> per_t(ts.size());
  for (int r = 0; r < replicas; ++r) {
    const std::vector<cplx> g =
        resolvent_diagonal(sample_matrix(spec, N, seed + static_cast<std::uint64_t>(r)), z);
    for (std::size_t i = 0; i < ts.size(); ++i) per_t[i].push_back(phi_average(spec, g, ts[i]));
  }
  std::vector<ComplexEstimate> out;
  for (const auto& v : per_t) out.push_back(estimate_of(v));
  return out;
}

std::vector<ComplexEstimate> empirical_rho_pair(cplx z, cplx zp, double u,
                                                std::span<const std::pair<double, double>> tts,
                                                const EnsembleSpec& spec, int N,
                                                std::uint64_t seed, int replicas) {
  for (const auto& [t, tp] : tts) {
    require_sign(z, t, "empirical_rho_pair");
    require_sign(zp, tp, "empirical_rho_pair");
  }
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("empirical_rho_pair: u must lie in [0, 1]");
  if (N < 3) throw ConfigError("empirical_rho_pair: N must be at least 3");
  if (replicas < 1) throw ConfigError("empirical_rho_pair: need at least one replica");
  const int k = std::clamp(static_cast<int>(std::lround(u * N)), 1, N);
  const int shared = k - 1;  // leading block kept from A_k

  std::vector<std::vector<cplx>> per_pair(tts.size());
  for (int r = 0; r < replicas; ++r) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(r);
    const SymmetricMatrix ak = sample_matrix(spec, N, s).minor(k - 1);
    const SymmetricMatrix bk = sample_matrix(spec, N, s + kCouplingSeedOffset).minor(k - 1);
    SymmetricMatrix apk = ak;
    for (int i = 0; i < ak.dim(); ++i)
      for (int j = 0; j <= i; ++j)
        if (i >= shared || j >= shared) apk.set(i, j, bk(i, j));
    const std::vector<cplx> g = resolvent_diagonal(ak, z);
    const std::vector<cplx> gp = resolvent_diagonal(apk, zp);
    for (std::size_t i = 0; i < tts.size(); ++i)
      per_pair[i].push_back(phi_average(spec, g, tts[i].first, &gp, tts[i].second));
  }
  std::vector<ComplexEstimate> out;
  for (const auto& v : per_pair) out.push_back(estimate_of(v));
  return out;
}

}  // namespace htclt
