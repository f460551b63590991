// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.
//
// usage: acceptance <stewardsim-cli> <config.json> <work-dir>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "stewardsim/stewardsim.hpp"

using namespace stewardsim;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s criterion %d (%s): %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<PolicyRecord> random_records(std::size_t n, std::mt19937_64& gen, bool coarse) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> grid(0, 10);
  std::vector<PolicyRecord> out(n);
  for (auto& r : out) {
    r.m = coarse ? grid(gen) / 10.0 : u(gen);
    r.y = u(gen) < r.m ? 1 : 0;
    r.rho_j = u(gen) < 0.25 + 0.5 * r.m ? 1 : 0;
    r.pregnant = u(gen) < 0.3 ? 1 : 0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// 1, 2, 7: exact properties

void oracle_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(2024);
  int mismatches = 0, compared = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const auto recs = random_records(50, gen, inst % 2 == 1);
    mismatches += optimize_ab_reduction(recs).objective_value !=
                  brute_force_oracle(recs, Rule::kReduction).objective_value;
    mismatches += optimize_buti(recs).objective_value != brute_force_oracle(recs, Rule::kButi).objective_value;
    compared += 2;
  }
  const double secs = seconds_since(t0);
  report(1, "oracle equivalence", mismatches == 0 && secs < 10.0,
         fmt("%d mismatches in %d comparisons, %.2f s", mismatches, compared, secs));
}

void identity_and_boundary() {
  std::mt19937_64 gen(77);
  int bad = 0, instances = 0;
  for (int inst = 0; inst < 500; ++inst) {
    const auto recs = random_records(1 + inst % 120, gen, inst % 3 == 0);
    ++instances;
    const auto id = evaluate(recs, identity_params());
    bad += id.delta_rho != 0 || id.delta_buti != 0 || id.n_changed != 0;
    const auto never = evaluate_machine_only(recs, kNeverPrescribe);
    if (!never.pct_rho_undefined) bad += never.pct_delta_rho != -100.0;
    if (!never.pct_buti_undefined) bad += never.pct_delta_buti != -100.0;
  }
  report(2, "identity and boundary", bad == 0, fmt("%d violations over %d instances", bad, instances));
}

// Solves A x = b by Gaussian elimination with partial pivoting.
std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double acc = b[i];
    for (std::size_t k = i + 1; k < n; ++k) acc -= a[i][k] * x[k];
    x[i] = acc / a[i][i];
  }
  return x;
}

void numerical_metrics() {
  std::mt19937_64 gen(31);
  std::uniform_int_distribution<int> grid(0, 50);
  std::bernoulli_distribution coin(0.4);

  int auc_bad = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<double> s(80), cube, expo;
    std::vector<int> y(80);
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = grid(gen) / 50.0;
      y[i] = coin(gen);
    }
    y[0] = 1;
    y[1] = 0;
    for (double v : s) {
      cube.push_back(v * v * v);
      expo.push_back(std::exp(3.0 * v) - 7.0);
    }
    const double a = roc_auc(s, y).auc;
    auc_bad += roc_auc(cube, y).auc != a || roc_auc(expo, y).auc != a;
  }

  double ols_err = 0.0;
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 60, p = 4;
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd yv(n);
    std::vector<std::vector<double>> xtx(p, std::vector<double>(p, 0.0));
    std::vector<double> xty(p, 0.0);
    for (int i = 0; i < n; ++i) {
      x(i, 0) = 1.0;
      for (int j = 1; j < p; ++j) x(i, j) = nd(gen);
      yv(i) = 0.3 - x(i, 1) + 0.5 * x(i, 3) + nd(gen) * (1.0 + std::abs(x(i, 2)));
      for (int a = 0; a < p; ++a) {
        xty[static_cast<std::size_t>(a)] += x(i, a) * yv(i);
        for (int b = 0; b < p; ++b) xtx[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] += x(i, a) * x(i, b);
      }
    }
    const auto want = solve(xtx, xty);
    const auto got = ols_robust(x, yv);
    for (std::size_t j = 0; j < want.size(); ++j) ols_err = std::max(ols_err, std::abs(got.coefficients[j].estimate - want[j]));
  }

  FeatureMatrix fx(0, 4);
  std::vector<double> fy;
  std::uniform_int_distribution<int> v(0, 9);
  for (int i = 0; i < 600; ++i) {
    const std::vector<double> row{double(v(gen)), 2.5, double(v(gen)), double(v(gen))};
    fx.append_row(row);
    fy.push_back(coin(gen) || row[0] > 6 ? 1.0 : 0.0);
  }
  ForestParams fp;
  fp.n_trees = 20;
  const auto model = fit(fx, fy, fp);
  const double constant_imp = permutation_importance(model, fx, fy, 5, 3)[1];

  double small = 0.0, large = 0.0;
  std::bernoulli_distribution rx(0.3), pos(0.33), flip(0.2);
  auto decided = [&](std::size_t n, std::mt19937_64& g) {
    std::vector<DecidedRecord> out(n);
    for (auto& r : out) {
      r.rho_j = rx(g);
      r.y = pos(g);
      r.p = flip(g) ? 1 - r.rho_j : r.rho_j;
    }
    return out;
  };
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 g(seed);
    const auto a = bootstrap_ci(decided(2000, g), 400, seed).pct_rho;
    const auto b = bootstrap_ci(decided(8000, g), 400, seed).pct_rho;
    small += a.hi - a.lo;
    large += b.hi - b.lo;
  }
  const double ratio = large / small;
  report(7, "numerical metrics",
         auc_bad == 0 && ols_err <= 1e-10 && constant_imp == 0.0 && ratio >= 0.35 && ratio <= 0.65,
         fmt("AUC mismatches %d/1000, OLS max error %.2e, constant-feature importance %g, CI width ratio %.3f",
             auc_bad, ols_err, constant_imp, ratio));
}

// ---------------------------------------------------------------------------
// 3 to 6: desk default over five seeds

struct SeedResult {
  double positive_rate = 0.0, auc = 0.0;
  double post[2][2] = {};  // [rule][exempt]
  double ante[2][2] = {};
  std::size_t covered = 0, windows = 0;  // ex-ante constraint CIs covering 0
  std::size_t infeasible = 0, mismatched = 0, checked = 0;
  std::vector<SweepPoint> curve;
};

SeedResult desk_seed(std::uint64_t seed) {
  SeedResult r;
  const auto cohort = generate(CohortConfig{}, seed);
  for (const auto& c : cohort.consultations) r.positive_rate += c.y;
  r.positive_rate /= static_cast<double>(cohort.size());

  Schedule schedule;
  schedule.seed = seed;
  ForestParams forest;
  forest.seed = seed;
  const auto cache = build_scores(cohort, schedule, forest);

  std::vector<double> scores;
  std::vector<int> y;
  for (const auto& ws : cache.expost) {
    for (std::size_t i = ws.begin; i < ws.end; ++i) {
      scores.push_back(ws.scores[i - ws.begin]);
      y.push_back(cohort.consultations[i].y);
    }
  }
  r.auc = roc_auc(scores, y).auc;

  for (int ri = 0; ri < 2; ++ri) {
    const Rule rule = ri == 0 ? Rule::kReduction : Rule::kButi;
    for (int ex = 0; ex < 2; ++ex) {
      RunOptions opt;
      opt.exempt_pregnant = ex == 1;
      const auto post = run_expost(cohort, schedule, cache, rule, opt);
      for (std::size_t w = 0; w < post.windows.size(); ++w) {
        const auto& wr = post.windows[w];
        if (wr.empty) continue;
        const auto& ws = cache.expost[w];
        std::vector<PolicyRecord> recs;
        for (std::size_t i = ws.begin; i < ws.end; ++i) {
          const auto& c = cohort.consultations[i];
          recs.push_back({ws.scores[i - ws.begin], c.rho_j, c.y, c.pregnant, c.post_test_rx});
        }
        const auto& params = wr.params.at(0).params;
        const auto o = opt.exempt_pregnant ? evaluate_exempt(recs, params) : evaluate(recs, params);
        ++r.checked;
        r.infeasible += rule == Rule::kReduction ? o.delta_buti < 0 : o.delta_rho > 0;
        r.mismatched += o.delta_rho != wr.outcome.delta_rho || o.delta_buti != wr.outcome.delta_buti;
      }
      r.post[ri][ex] = post.aggregate.objective_pct;

      const auto ante = run_exante(cohort, schedule, cache, rule, opt);
      r.ante[ri][ex] = ante.aggregate.objective_pct;
      if (!opt.exempt_pregnant) {
        for (const auto& wr : ante.windows) {
          if (wr.empty) continue;
          ++r.windows;
          r.covered += wr.constraint_ci.covers(0.0);
        }
      }
    }
  }
  r.curve = machine_only_sweep(cohort, schedule, cache, default_k_grid());
  return r;
}

void desk_criteria() {
  constexpr std::uint64_t kSeeds[] = {1, 2, 3, 4, 5};
  const auto t0 = Clock::now();
  std::vector<SeedResult> res;
  for (auto seed : kSeeds) {
    const auto ts = Clock::now();
    res.push_back(desk_seed(seed));
    std::printf("  desk seed %llu done in %.1f s\n", static_cast<unsigned long long>(seed), seconds_since(ts));
    std::fflush(stdout);
  }
  const double secs = seconds_since(t0);
  const double ns = static_cast<double>(res.size());

  std::size_t infeasible = 0, mismatched = 0, checked = 0;
  for (const auto& r : res) {
    infeasible += r.infeasible;
    mismatched += r.mismatched;
    checked += r.checked;
  }
  report(3, "constraint feasibility", infeasible == 0 && mismatched == 0 && checked > 0,
         fmt("%zu ex-post window reports, %zu infeasible, %zu differ from direct evaluation", checked, infeasible,
             mismatched));

  double pos = 0.0, auc = 0.0, post[2][2] = {}, ante[2][2] = {};
  std::size_t covered = 0, windows = 0;
  for (const auto& r : res) {
    pos += r.positive_rate / ns;
    auc += r.auc / ns;
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        post[a][b] += r.post[a][b] / ns;
        ante[a][b] += r.ante[a][b] / ns;
      }
    }
    covered += r.covered;
    windows += r.windows;
  }
  const double cover = windows ? static_cast<double>(covered) / static_cast<double>(windows) : 0.0;
  const bool ok4 = pos >= 0.30 && pos <= 0.36 && auc >= 0.70 && auc <= 0.76 && post[0][0] >= -13.0 &&
                   post[0][0] <= -6.0 && post[1][0] >= 5.0 && post[1][0] <= 11.0 &&
                   std::abs(ante[0][0]) < std::abs(post[0][0]) && std::abs(ante[1][0]) < std::abs(post[1][0]) &&
                   cover >= 0.70 && secs < 900.0;
  report(4, "calibrated reproduction", ok4,
         fmt("positive rate %.3f, AUC %.4f, ex-post reduction %.2f%%, ex-post bUTI %+.2f%%, ex-ante %.2f%% / %+.2f%%, "
             "constraint CI covers 0 in %zu/%zu windows (%.0f%%), %.0f s",
             pos, auc, post[0][0], post[1][0], ante[0][0], ante[1][0], covered, windows, 100.0 * cover, secs));

  const std::size_t nk = res.front().curve.size();
  std::size_t win_win = 0;
  double rho0 = 0.0, buti0 = 0.0;
  for (std::size_t j = 0; j < nk; ++j) {
    double rho = 0.0, buti = 0.0;
    for (const auto& r : res) {
      rho += r.curve[j].pooled.pct_delta_rho / ns;
      buti += r.curve[j].pooled.pct_delta_buti / ns;
    }
    win_win += rho < 0.0 && buti > 0.0;
    if (j == 0) {
      rho0 = rho;
      buti0 = buti;
    }
  }
  report(5, "machine-only failure",
         win_win == 0 && rho0 >= 180.0 && rho0 <= 280.0 && buti0 >= 60.0 && buti0 <= 95.0,
         fmt("%zu cut-offs improve both, k = 0 gives %+.1f%% prescriptions and %+.1f%% treated bUTI", win_win, rho0,
             buti0));

  bool ok6 = true;
  std::string d6;
  for (int a = 0; a < 2; ++a) {
    for (const auto* table : {&post, &ante}) {
      const double base = (*table)[a][0], ex = (*table)[a][1];
      ok6 = ok6 && std::signbit(base) == std::signbit(ex) && base != 0.0 && ex != 0.0 && std::abs(base - ex) <= 4.0;
      d6 += fmt("%s%s %s %+.2f vs exempt %+.2f", d6.empty() ? "" : ", ", a == 0 ? "reduction" : "bUTI",
                table == &post ? "ex-post" : "ex-ante", base, ex);
    }
  }
  report(6, "pregnancy exemption", ok6, d6);
}

// ---------------------------------------------------------------------------
// 8: byte-identical CLI bundles

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void determinism(int argc, char** argv) {
  if (argc < 4) {
    report(8, "determinism", false, "needs the CLI path, a config and a work directory");
    return;
  }
  const fs::path work = argv[3];
  fs::remove_all(work);
  const char* tags[] = {"a", "b", "c"};
  const int threads[] = {1, 1, 4};
  for (int i = 0; i < 3; ++i) {
    const std::string cmd = std::string("\"") + argv[1] + "\" run --config \"" + argv[2] +
                            "\" --exempt-pregnant --machine-only --trace --threads " + std::to_string(threads[i]) +
                            " --out \"" + (work / tags[i]).string() + "\" > /dev/null";
    if (std::system(cmd.c_str()) != 0) {
      report(8, "determinism", false, std::string("run ") + tags[i] + " failed");
      return;
    }
  }
  std::size_t files = 0, differ = 0;
  for (const auto& e : fs::directory_iterator(work / "a")) {
    if (!e.is_regular_file()) continue;
    ++files;
    const auto name = e.path().filename();
    const auto ref = slurp(e.path());
    differ += ref != slurp(work / "b" / name) || ref != slurp(work / "c" / name);
  }
  report(8, "determinism", files >= 8 && differ == 0,
         fmt("%zu bundle files, %zu differ across two single-threaded runs and one 4-thread run", files, differ));
}

}  // namespace

int main(int argc, char** argv) {
  try {
    oracle_equivalence();
    identity_and_boundary();
    desk_criteria();
    numerical_metrics();
    determinism(argc, argv);
  } catch (const std::exception& e) {
    std::printf("FAIL acceptance aborted: %s\n", e.what());
    return 3;
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
