#include "htclt/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "htclt/acceptance.hpp"
#include "htclt/combinatorics.hpp"
#include "htclt/errors.hpp"
#include "htclt/fixedpoint.hpp"
#include "htclt/numerics.hpp"
#include "htclt/svg.hpp"

namespace htclt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kMaxPredictedOrder = 7;

std::string point_text(cplx z) {
  std::ostringstream os;
  os << z.real() << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag()) << 'i';
  return os.str();
}

std::ofstream open_output(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw ConfigError("cannot write '" + p.string() + "'");
  os << std::setprecision(17);
  return os;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

RunManifest start_manifest(const std::string& name, const CommandContext& ctx) {
  fs::create_directories(ctx.out);
  RunManifest m;
  m.subcommand = name;
  m.config_path = ctx.config.origin();
  m.config_snapshot = ctx.config.snapshot();
  m.output_dir = ctx.out.string();
  return m;
}

void finish_manifest(RunManifest& m, const CommandContext& ctx) {
  std::ofstream(ctx.out / "manifest.json", std::ios::binary) << m.to_json() << '\n';
  ctx.log << "manifest: " << (ctx.out / "manifest.json").string() << '\n';
}

ReportOptions report_options(const AppConfig& c) {
  ReportOptions o;
  o.bootstrap = c.get_int("experiment.bootstrap", 200);
  o.gaussianity_bootstrap = c.get_int("experiment.gaussianity_bootstrap", 500);
  o.seed = c.seed();
  const std::string norm = c.get("experiment.normalization", "sqrtN");
  if (norm == "sqrtN")
    o.normalization = Normalization::SqrtN;
  else if (norm == "one")
    o.normalization = Normalization::One;
  else
    throw ConfigError("experiment.normalization must be sqrtN or one");
  return o;
}

// Histogram of samples with normal densities overlaid.
std::string histogram_svg(const std::string& title, const std::vector<double>& xs,
                          const std::vector<std::pair<std::string, double>> normals) {
  const auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
  const double lo = *lo_it, hi = *hi_it;
  const int bins = std::clamp(static_cast<int>(std::sqrt(static_cast<double>(xs.size()))), 5, 60);
  const double w = hi > lo ? (hi - lo) / bins : 1.0;
  std::vector<double> left(bins), height(bins, 0.0);
  for (int b = 0; b < bins; ++b) left[b] = lo + b * w;
  for (double x : xs) {
    const int b = std::min(bins - 1, static_cast<int>((x - lo) / w));
    height[b] += 1.0 / (xs.size() * w);
  }
  SvgPlot plot(title, "centred statistic", "density");
  plot.add_bars(left, w, height, "#4c72b0");
  const char* colors[] = {"#dd8452", "#55a868", "#c44e52"};
  for (std::size_t k = 0; k < normals.size(); ++k) {
    const double v = normals[k].second;
    if (!(v > 0.0)) continue;
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i <= 200; ++i) {
      const double x = lo + (hi - lo) * i / 200.0;
      pts.emplace_back(x, std::exp(-x * x / (2 * v)) / std::sqrt(2 * std::numbers::pi * v));
    }
    plot.add_line(normals[k].first, std::move(pts), colors[k % 3]);
  }
  return plot.render();
}

const SampleBlock& largest_block(const SampleTable& t) {
  return *std::max_element(t.blocks.begin(), t.blocks.end(),
                           [](const SampleBlock& a, const SampleBlock& b) { return a.N < b.N; });
}

std::vector<double> centred_real(const SampleBlock& b, std::size_t f, Normalization n, bool imag) {
  const std::vector<cplx> col = b.column(f);
  std::vector<double> out;
  for (cplx v : centered_statistic(std::span<const cplx>(col), n, b.N))
    out.push_back(imag ? v.imag() : v.real());
  return out;
}

SampleTable run_and_store(const ExperimentConfig& exp, CommandContext& ctx, RunManifest& m) {
  ctx.log << "sampling " << exp.replicas << " replicas for " << exp.dims.size()
          << " dimension(s), config hash " << exp.hash().substr(0, 12) << '\n';
  SampleTable table = run_replicas(exp);
  {
    auto os = open_output(ctx.out / "samples.csv");
    write_sample_csv(os, table);
  }
  m.add(ctx.out / "samples.csv");
  return table;
}

}  // namespace

void RunManifest::add(const fs::path& file) {
  const std::string rel = fs::relative(file, output_dir).generic_string();
  artifacts.emplace_back(rel, sha256_hex(read_file(file)));
}

std::string RunManifest::to_json() const {
  json j;
  j["subcommand"] = subcommand;
  j["config_path"] = config_path;
  j["config"] = config_snapshot;
  j["output_dir"] = output_dir;
  j["artifacts"] = json::array();
  for (const auto& [path, hash] : artifacts) j["artifacts"].push_back({{"path", path}, {"sha256", hash}});
  return j.dump(2);
}

std::string report_json(const StatReport& r) {
  json j;
  j["normalization"] = r.normalization == Normalization::SqrtN ? "sqrtN" : "one";
  j["base_seed"] = r.base_seed;
  j["config_hash"] = r.config_hash;
  j["bootstrap"] = r.bootstrap;
  j["centering"] = r.centering_note;
  j["blocks"] = json::array();
  auto gauss = [](const GaussianityReport& g) {
    return json{{"method", g.method},           {"n", g.n},
                {"ks_statistic", g.ks_statistic}, {"p_value", g.p_value},
                {"fitted_variance", g.fitted_variance}, {"skewness", g.skewness},
                {"skewness_se", g.skewness_se},   {"excess_kurtosis", g.excess_kurtosis},
                {"excess_kurtosis_se", g.excess_kurtosis_se}};
  };
  for (const BlockReport& b : r.blocks) {
    json jb;
    jb["N"] = b.N;
    jb["replicas"] = b.replicas;
    for (const FeatureReport& f : b.features) {
      json jf{{"name", f.name},
              {"mean", {f.mean.real(), f.mean.imag()}},
              {"mean_se", {f.mean_se_re, f.mean_se_im}}};
      if (f.re) jf["gaussianity_re"] = gauss(*f.re);
      if (f.im) jf["gaussianity_im"] = gauss(*f.im);
      jb["features"].push_back(jf);
    }
    jb["coordinates"] = b.coordinates;
    jb["covariance"] = b.covariance;
    jb["covariance_se"] = b.covariance_se;
    json pc = json::array();
    for (const auto& row : b.pseudo_covariance) {
      json jr = json::array();
      for (cplx v : row) jr.push_back({v.real(), v.imag()});
      pc.push_back(jr);
    }
    jb["pseudo_covariance"] = pc;
    jb["pseudo_covariance_se_re"] = b.pseudo_covariance_se_re;
    jb["pseudo_covariance_se_im"] = b.pseudo_covariance_se_im;
    j["blocks"].push_back(jb);
  }
  return j.dump(2);
}

int cmd_sample(CommandContext& ctx) {
  RunManifest m = start_manifest("sample", ctx);
  const ExperimentConfig exp = ctx.config.experiment();
  const SampleTable table = run_and_store(exp, ctx, m);
  for (const SampleBlock& b : table.blocks)
    for (std::size_t f = 0; f < table.features.size(); ++f) {
      const std::vector<cplx> col = b.column(f);
      std::vector<double> re, im;
      for (cplx v : col) {
        re.push_back(v.real());
        im.push_back(v.imag());
      }
      ctx.log << "N=" << b.N << ' ' << table.features[f] << " mean " << mean_of<double>(re);
      if (table.statistic.is_complex()) ctx.log << (mean_of<double>(im) < 0 ? "" : "+") << mean_of<double>(im) << 'i';
      ctx.log << " (se " << jackknife_se_mean(re) << ")\n";
    }
  finish_manifest(m, ctx);
  return kExitOk;
}

int cmd_moments_clt(CommandContext& ctx) {
  RunManifest m = start_manifest("moments-clt", ctx);
  const ExperimentConfig exp = ctx.config.experiment();
  if (exp.statistic.kind != StatisticKind::Moment)
    throw ConfigError("moments-clt needs statistic = moment");
  const SampleTable table = run_and_store(exp, ctx, m);
  const ReportOptions ro = report_options(ctx.config);
  const StatReport rep = summarize(table, ro);

  const auto& orders = exp.statistic.orders;
  const bool predictable = exp.ensemble.family != Family::Levy &&
                           *std::max_element(orders.begin(), orders.end()) <= kMaxPredictedOrder &&
                           ro.normalization == Normalization::SqrtN;
  std::vector<std::vector<double>> predicted(orders.size(), std::vector<double>(orders.size(), NAN));
  if (predictable) {
    const int top = *std::max_element(orders.begin(), orders.end());
    const CSequence c = exp.ensemble.c_sequence(2 * top);
    for (std::size_t a = 0; a < orders.size(); ++a)
      for (std::size_t b = a; b < orders.size(); ++b)
        predicted[a][b] = predicted[b][a] = limiting_moment_covariance(orders[a], orders[b], c);
  }

  {
    auto os = open_output(ctx.out / "moments_clt.csv");
    os << "# schema=1\nN,feature_a,feature_b,empirical,bootstrap_se,predicted\n";
    for (const BlockReport& b : rep.blocks)
      for (std::size_t i = 0; i < orders.size(); ++i)
        for (std::size_t k = i; k < orders.size(); ++k) {
          os << b.N << ',' << table.features[i] << ',' << table.features[k] << ','
             << b.covariance[i][k] << ',' << b.covariance_se[i][k] << ',';
          if (!std::isnan(predicted[i][k])) os << predicted[i][k];
          os << '\n';
          ctx.log << "N=" << b.N << " cov(" << table.features[i] << ", " << table.features[k]
                  << ") = " << b.covariance[i][k] << " +- " << b.covariance_se[i][k];
          if (!std::isnan(predicted[i][k])) ctx.log << "  predicted " << predicted[i][k];
          ctx.log << '\n';
        }
  }
  m.add(ctx.out / "moments_clt.csv");
  std::ofstream(ctx.out / "report.json", std::ios::binary) << report_json(rep) << '\n';
  m.add(ctx.out / "report.json");

  const SampleBlock& big = largest_block(table);
  const std::vector<double> xs = centred_real(big, 0, ro.normalization, false);
  double v = 0.0;
  for (double x : xs) v += x * x;
  v /= static_cast<double>(xs.size() - 1);
  std::vector<std::pair<std::string, double>> normals{{"fitted normal", v}};
  if (!std::isnan(predicted[0][0])) normals.emplace_back("predicted normal", predicted[0][0]);
  std::ofstream(ctx.out / "moments_hist.svg", std::ios::binary)
      << histogram_svg(table.features[0] + " at N=" + std::to_string(big.N), xs, normals);
  m.add(ctx.out / "moments_hist.svg");
  finish_manifest(m, ctx);
  return kExitOk;
}

int cmd_stieltjes_clt(CommandContext& ctx) {
  RunManifest m = start_manifest("stieltjes-clt", ctx);
  const ExperimentConfig exp = ctx.config.experiment();
  if (exp.statistic.kind != StatisticKind::Resolvent)
    throw ConfigError("stieltjes-clt needs statistic = resolvent");
  const SampleTable table = run_and_store(exp, ctx, m);
  const ReportOptions ro = report_options(ctx.config);
  const StatReport rep = summarize(table, ro);
  const auto& zs = exp.statistic.points;

  const bool predictable =
      exp.ensemble.family != Family::Levy && ro.normalization == Normalization::SqrtN;
  std::vector<std::vector<CovarianceResult>> predicted(zs.size(),
                                                       std::vector<CovarianceResult>(zs.size()));
  if (predictable) {
    const CovarianceOptions co = ctx.config.covariance();
    for (std::size_t a = 0; a < zs.size(); ++a)
      for (std::size_t b = a; b < zs.size(); ++b) {
        ctx.log << "solving C(" << point_text(zs[a]) << ", " << point_text(zs[b]) << ")\n";
        predicted[a][b] = predicted[b][a] = covariance_C(zs[a], zs[b], exp.ensemble, co);
      }
  } else {
    ctx.log << "no analytic covariance for this family; empirical only\n";
  }

  {
    auto os = open_output(ctx.out / "stieltjes_clt.csv");
    os << "# schema=1\nN,z_a,z_b,re_empirical,im_empirical,se_re,se_im,re_predicted,im_predicted,"
          "u_error\n";
    for (const BlockReport& b : rep.blocks)
      for (std::size_t i = 0; i < zs.size(); ++i)
        for (std::size_t k = i; k < zs.size(); ++k) {
          const cplx e = b.pseudo_covariance[i][k];
          os << b.N << ',' << point_text(zs[i]) << ',' << point_text(zs[k]) << ',' << e.real()
             << ',' << e.imag() << ',' << b.pseudo_covariance_se_re[i][k] << ','
             << b.pseudo_covariance_se_im[i][k] << ',';
          if (predictable)
            os << predicted[i][k].value.real() << ',' << predicted[i][k].value.imag() << ','
               << predicted[i][k].u_error;
          else
            os << ",,";
          os << '\n';
          ctx.log << "N=" << b.N << " E[Z(" << point_text(zs[i]) << ")Z(" << point_text(zs[k])
                  << ")] = " << point_text(e);
          if (predictable) ctx.log << "  predicted " << point_text(predicted[i][k].value);
          ctx.log << '\n';
        }
  }
  m.add(ctx.out / "stieltjes_clt.csv");
  std::ofstream(ctx.out / "report.json", std::ios::binary) << report_json(rep) << '\n';
  m.add(ctx.out / "report.json");

  const SampleBlock& big = largest_block(table);
  const std::vector<double> xs = centred_real(big, 0, ro.normalization, false);
  double v = 0.0;
  for (double x : xs) v += x * x;
  v /= static_cast<double>(xs.size() - 1);
  std::ofstream(ctx.out / "stieltjes_hist.svg", std::ios::binary)
      << histogram_svg("Re " + table.features[0] + " at N=" + std::to_string(big.N), xs,
                       {{"fitted normal", v}});
  m.add(ctx.out / "stieltjes_hist.svg");
  finish_manifest(m, ctx);
  return kExitOk;
}

int cmd_solve(CommandContext& ctx) {
  RunManifest m = start_manifest("solve", ctx);
  const EnsembleSpec spec = ctx.config.ensemble();
  const KernelSpec kernel = KernelSpec::from(spec);
  const SolverOptions so = ctx.config.solver();
  const std::vector<cplx> zs = parse_complex_list(ctx.config.get("solver.z", "2i"));
  if (zs.empty()) throw ConfigError("solver.z is empty");

  {
    auto os = open_output(ctx.out / "stieltjes.csv");
    os << "# schema=1\nindex,z,re_s,im_s,iterations,residual\n";
    for (std::size_t k = 0; k < zs.size(); ++k) {
      const RhoGrid rho = solve_rho(zs[k], kernel, so);
      const cplx s = stieltjes_limit(zs[k], rho);
      os << k << ',' << point_text(zs[k]) << ',' << s.real() << ',' << s.imag() << ','
         << rho.iterations << ',' << rho.residual << '\n';
      ctx.log << "z=" << point_text(zs[k]) << " s(z)=" << point_text(s) << " after "
              << rho.iterations << " iterations\n";
      const fs::path csv = ctx.out / ("rho_" + std::to_string(k) + ".csv");
      {
        auto rs = open_output(csv);
        write_rho_csv(rs, rho);
      }
      m.add(csv);
      if (k == 0) {
        std::vector<std::pair<double, double>> re, im;
        for (std::size_t j = 0; j < rho.t.size(); ++j) {
          re.emplace_back(rho.t[j], rho.values[j].real());
          im.emplace_back(rho.t[j], rho.values[j].imag());
        }
        SvgPlot plot("rho at z=" + point_text(zs[k]), "t", "rho(t)");
        plot.add_line("Re rho", std::move(re), "#4c72b0");
        plot.add_line("Im rho", std::move(im), "#dd8452");
        std::ofstream(ctx.out / "rho.svg", std::ios::binary) << plot.render();
        m.add(ctx.out / "rho.svg");
      }
    }
  }
  m.add(ctx.out / "stieltjes.csv");

  const double eta = ctx.config.get_double("solver.density_eta", 0.1);
  const double x0 = ctx.config.get_double("solver.density_x_min", -4.0);
  const double x1 = ctx.config.get_double("solver.density_x_max", 4.0);
  const int points = ctx.config.get_int("solver.density_points", 81);
  if (!(eta > 0.0) || points < 2 || !(x1 > x0))
    throw ConfigError("density curve needs eta > 0, x_max > x_min and at least 2 points");
  const RhoSolver solver(kernel, so, so.t_max_factor / eta);
  std::vector<std::pair<double, double>> curve;
  {
    auto os = open_output(ctx.out / "density.csv");
    os << "# schema=1\n# eta=" << eta << "\nx,density\n";
    for (int i = 0; i < points; ++i) {
      const double x = x0 + (x1 - x0) * i / (points - 1);
      const cplx z{x, eta};
      const double d = -stieltjes_limit(z, solver.solve(z)).imag() / std::numbers::pi;
      os << x << ',' << d << '\n';
      curve.emplace_back(x, d);
    }
  }
  m.add(ctx.out / "density.csv");
  SvgPlot plot("density proxy -Im s(x+i" + std::to_string(eta).substr(0, 5) + ")/pi", "x",
               "density");
  plot.add_line("", std::move(curve), "#4c72b0");
  std::ofstream(ctx.out / "density.svg", std::ios::binary) << plot.render();
  m.add(ctx.out / "density.svg");
  finish_manifest(m, ctx);
  return kExitOk;
}

int cmd_verify(CommandContext& ctx) {
  RunManifest m = start_manifest("verify", ctx);
  AcceptanceOptions opts;
  if (ctx.config.has("run.seed")) opts.seed = ctx.config.seed();
  opts.threads = ctx.config.threads();
  opts.long_running = ctx.config.get_bool("verify.long_running", true);
  opts.dump_dir = ctx.out.string();
  for (int id : parse_int_list(ctx.config.get("verify.criteria", ""))) {
    if (id < 1 || id > kCriterionCount) throw ConfigError("no criterion " + std::to_string(id));
    opts.only.insert(id);
  }
  const auto results =
      run_acceptance(opts, [&](const CriterionResult& r) { ctx.log << format_line(r) << std::endl; });
  std::ofstream(ctx.out / "verify.json", std::ios::binary) << results_json(results) << '\n';
  m.add(ctx.out / "verify.json");
  finish_manifest(m, ctx);
  const bool failed = std::any_of(results.begin(), results.end(),
                                  [](const CriterionResult& r) { return r.verdict == Verdict::Fail; });
  return failed ? kExitCheckFailed : kExitOk;
}

std::vector<std::string> command_names() {
  return {"sample", "moments-clt", "stieltjes-clt", "solve", "verify"};
}

int run_command(const std::string& name, CommandContext& ctx, std::ostream& err) {
  try {
    if (name == "sample") return cmd_sample(ctx);
    if (name == "moments-clt") return cmd_moments_clt(ctx);
    if (name == "stieltjes-clt") return cmd_stieltjes_clt(ctx);
    if (name == "solve") return cmd_solve(ctx);
    if (name == "verify") return cmd_verify(ctx);
    err << "unknown subcommand '" << name << "'\n";
    return kExitConfig;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << " (residual " << e.residual() << ")\n";
    return kExitSolver;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const CapacityError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const UnsupportedFamilyError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    err << "output error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace htclt
