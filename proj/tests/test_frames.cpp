#include <catch2/catch_amalgamated.hpp>

#include "carnot/frames.hpp"
#include "carnot/rates.hpp"

using namespace carnot;

namespace {

Chart small_chart() {
  Chart c;
  c.dim_boundary = 3;
  c.r_min = 0.5;
  c.r_max = 12.0;
  c.base_box = {{-0.25, 0.25}, {-0.25, 0.25}, {-0.25, 0.25}};
  c.grid_counts = {5, 5, 5, 5};
  return c;
}

}  // namespace

TEST_CASE("beta series: Kahler models have constant beta_r and unit norm") {
  ModelSpec s;
  s.kind = ModelKind::cph_horo;
  Model m(s);
  Chart c = small_chart();
  LineRecord line = sample_line(m, c, {0.15, -0.2, 0.1}, {});
  BetaSeries beta = beta_series(line);
  REQUIRE(beta.limit_norm == Catch::Approx(1.0).margin(1e-8));
  for (std::size_t k = 0; k < line.nsamples(); ++k) {
    double sum = 0;
    for (int j = 0; j < 3; ++j) {
      sum += beta.value(k, j) * beta.value(k, j);
      REQUIRE(beta.value(k, j) == Catch::Approx(beta.value(0, j)).margin(1e-8));
    }
    REQUIRE(sum == Catch::Approx(1.0).margin(1e-8));
  }
}

TEST_CASE("beta decay slope matches the injected rate for rotated_J") {
  ModelSpec s;
  s.kind = ModelKind::rotated_J;
  s.a = 1.25;
  s.eps = 0.1;
  Model m(s);
  Chart c = small_chart();
  LineRecord line = sample_line(m, c, {0.05, 0.1, -0.1}, {});
  BetaSeries beta = beta_series(line);
  DecayFit fit = fit_decay(line.r, beta.decay, false, 2.0, 9.0);
  REQUIRE(fit.slope == Catch::Approx(1.25).margin(0.15));
}

TEST_CASE("extract_e0: cph_horo gives the unit Reeb direction") {
  ModelSpec s;
  s.kind = ModelKind::cph_horo;
  Model m(s);
  Chart c = small_chart();
  const std::vector<double> base = {0.0, 0.0, 0.0};
  LineRecord line = sample_line(m, c, base, {});
  BetaSeries beta = beta_series(line);
  std::vector<double> coeff = extract_e0(beta);
  // coordinate components: candidates * coeff; expect e^{-r_min} dt
  double e0[3] = {0, 0, 0};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) e0[i] += line.C_at(0)[i * 3 + j] * coeff[j];
  REQUIRE(e0[0] == Catch::Approx(std::exp(-c.r_min)).margin(1e-6));
  REQUIRE(std::abs(e0[1]) < 1e-6);
  REQUIRE(std::abs(e0[2]) < 1e-6);
}

TEST_CASE("extract_e0 rejects vanishing and non-unit beta") {
  BetaSeries bad;
  bad.limit = {0.0, 0.0, 0.0};
  bad.limit_norm = 0.0;
  REQUIRE_THROWS_WITH(extract_e0(bad), Catch::Matchers::ContainsSubstring("vanishes"));
  bad.limit = {0.5, 0.0, 0.0};
  bad.limit_norm = 0.5;
  REQUIRE_THROWS_WITH(extract_e0(bad), Catch::Matchers::ContainsSubstring("deviates"));
}

TEST_CASE("rotated_J: e0 differs from J dr and the gap decays at rate a") {
  ModelSpec s;
  s.kind = ModelKind::rotated_J;
  s.a = 1.25;
  s.eps = 0.1;
  Model m(s);
  Chart c = small_chart();
  LineRecord line = sample_line(m, c, {0.1, 0.05, -0.05}, {});
  BetaSeries beta = beta_series(line);
  AdmissibleFrame af = admissible_frame(line, beta, 0);
  // ||E0 - J dr||_g per sample
  std::vector<double> gap(line.nsamples());
  std::vector<double> E(9);
  const int d = 4;
  for (std::size_t k = 0; k < line.nsamples(); ++k) {
    af.frame_at(line, k, E.data());
    const double* g = line.g_at(k);
    const double* J = line.J_at(k);
    double diff[4];
    for (int mu = 0; mu < d; ++mu) {
      const double e0mu = (mu == 0) ? 0.0 : E[(mu - 1) * 3 + 0];
      diff[mu] = e0mu - J[mu * d + 0];
    }
    double n2 = 0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) n2 += g[i * d + j] * diff[i] * diff[j];
    gap[k] = std::sqrt(std::max(n2, 0.0));
  }
  REQUIRE(gap[0] > 1e-3);  // visibly different at the inner boundary
  DecayFit fit = fit_decay(line.r, gap, false, 2.0, 9.0);
  REQUIRE(fit.slope == Catch::Approx(1.25).margin(0.15));
}

TEST_CASE("admissible frame: orthonormal, beta(e_j) = delta_0j decays") {
  ModelSpec s;
  s.kind = ModelKind::cph_horo;
  Model m(s);
  Chart c = small_chart();
  LineRecord line = sample_line(m, c, {0.2, -0.1, 0.15}, {});
  BetaSeries beta = beta_series(line);
  AdmissibleFrame af = admissible_frame(line, beta, 0);
  // initial frame orthonormal in g0
  const double* g = line.g_at(0);
  const int d = 4;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      double ip = 0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          ip += g[(i + 1) * d + (j + 1)] * af.init[i * 3 + a] * af.init[j * 3 + b];
      REQUIRE(ip == Catch::Approx(a == b ? 1.0 : 0.0).margin(1e-8));
    }
  // transported frame stays orthonormal at r_max (drift checked by sampling)
  REQUIRE(line.drift < 1e-7);
  // g(J dr, E_j) - delta_0j at the last sample is tiny for the Kahler model
  std::vector<double> E(9);
  af.frame_at(line, line.nsamples() - 1, E.data());
  const double* gk = line.g_at(line.nsamples() - 1);
  const double* J = line.J_at(line.nsamples() - 1);
  for (int j = 0; j < 3; ++j) {
    double ip = 0;
    for (int mu = 0; mu < d; ++mu)
      for (int i = 0; i < 3; ++i)
        ip += gk[mu * d + (i + 1)] * J[mu * d + 0] * E[i * 3 + j];
    REQUIRE(ip == Catch::Approx(j == 0 ? 1.0 : 0.0).margin(1e-6));
  }
}

TEST_CASE("j-admissible frame: JE_1 = E_2 for Kahler models, one pair at n=1") {
  ModelSpec s;
  s.kind = ModelKind::cph_horo;
  Model m(s);
  Chart c = small_chart();
  LineRecord line = sample_line(m, c, {0.1, 0.2, -0.2}, {});
  BetaSeries beta = beta_series(line);
  AdmissibleFrame af = j_admissible_frame(line, admissible_frame(line, beta, 0));
  REQUIRE(af.j_admissible);
  REQUIRE(af.db == 3);  // exactly one pair (E_1, E_2) plus E_0
  std::vector<double> E(9);
  const int d = 4;
  for (std::size_t k = 0; k < line.nsamples(); k += 20) {
    af.frame_at(line, k, E.data());
    const double* g = line.g_at(k);
    const double* J = line.J_at(k);
    double JE1[4] = {0, 0, 0, 0};
    for (int mu = 0; mu < d; ++mu)
      for (int i = 0; i < 3; ++i) JE1[mu] += J[mu * d + (i + 1)] * E[i * 3 + 1];
    double diff[4];
    for (int mu = 0; mu < d; ++mu) {
      const double e2mu = (mu == 0) ? 0.0 : E[(mu - 1) * 3 + 2];
      diff[mu] = JE1[mu] - e2mu;
    }
    double n2 = 0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) n2 += g[i * d + j] * diff[i] * diff[j];
    REQUIRE(std::sqrt(std::max(n2, 0.0)) < 1e-6);
  }
}

TEST_CASE("j-admissible pairing gap decays at the injected rate for rotated_J") {
  ModelSpec s;
  s.kind = ModelKind::rotated_J;
  s.a = 1.25;
  s.eps = 0.1;
  Model m(s);
  Chart c = small_chart();
  LineRecord line = sample_line(m, c, {-0.1, 0.1, 0.05}, {});
  BetaSeries beta = beta_series(line);
  AdmissibleFrame af = j_admissible_frame(line, admissible_frame(line, beta, 0));
  std::vector<double> gap(line.nsamples());
  std::vector<double> E(9);
  const int d = 4;
  for (std::size_t k = 0; k < line.nsamples(); ++k) {
    af.frame_at(line, k, E.data());
    const double* g = line.g_at(k);
    const double* J = line.J_at(k);
    double JE1[4] = {0, 0, 0, 0};
    for (int mu = 0; mu < d; ++mu)
      for (int i = 0; i < 3; ++i) JE1[mu] += J[mu * d + (i + 1)] * E[i * 3 + 1];
    double diff[4];
    for (int mu = 0; mu < d; ++mu) {
      const double e2mu = (mu == 0) ? 0.0 : E[(mu - 1) * 3 + 2];
      diff[mu] = JE1[mu] - e2mu;
    }
    double n2 = 0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) n2 += g[i * d + j] * diff[i] * diff[j];
    gap[k] = std::sqrt(std::max(n2, 0.0));
  }
  DecayFit fit = fit_decay(line.r, gap, false, 2.0, 9.0);
  REQUIRE(fit.slope == Catch::Approx(1.25).margin(0.2));
}

TEST_CASE("gram-schmidt seeds permute deterministically") {
  std::vector<double> eye = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  std::vector<double> f0 = detail::gram_schmidt_frame(eye.data(), 3, 0);
  std::vector<double> f1 = detail::gram_schmidt_frame(eye.data(), 3, 1);
  std::vector<double> f0b = detail::gram_schmidt_frame(eye.data(), 3, 0);
  REQUIRE(f0 == f0b);  // reproducible
  REQUIRE(f0 != f1);   // permuted seeds produce a different frame
}
