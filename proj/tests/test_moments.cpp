#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "pmra/model.hpp"
#include "pmra/moments.hpp"

using namespace pmra;

namespace {

Signal random_signal(int p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return Signal(oracle::gaussian_vector(p, rng));
}

double max_gap(const Tensor3& t, const oracle::Moments& ref) {
  double gap = 0.0;
  const int q = t.dim();
  for (int a = 0; a < q; ++a)
    for (int b = 0; b < q; ++b)
      for (int c = 0; c < q; ++c) gap = std::max(gap, std::abs(t(a, b, c) - ref.at(a, b, c)));
  return gap;
}

double max_gap(const MomentSet& m, const oracle::Moments& ref) {
  return std::max({(m.t1 - ref.t1).cwiseAbs().maxCoeff(), (m.t2 - ref.t2).cwiseAbs().maxCoeff(),
                   max_gap(m.t3, ref)});
}

double max_gap(const Tensor3& a, const Tensor3& b) {
  double gap = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) gap = std::max(gap, std::abs(a.data()[i] - b.data()[i]));
  return gap;
}

double relative_error(const Tensor3& a, const Tensor3& ref) { return (a - ref).frobenius_norm() / ref.frobenius_norm(); }

}  // namespace

TEST_CASE("tensor storage and symmetry measure") {
  Tensor3 t(3);
  t(0, 1, 2) = 1.0;
  CHECK(t.data()[5] == 1.0);
  CHECK(t.asymmetry() == 1.0);
  for (int a : {0, 1, 2})
    for (int b : {0, 1, 2})
      for (int c : {0, 1, 2})
        if (a != b && b != c && a != c) t(a, b, c) = 1.0;
  CHECK(t.asymmetry() == 0.0);
  CHECK(t.frobenius_norm() == doctest::Approx(std::sqrt(6.0)));
}

TEST_CASE("cosine matrix entries, Gram identity, and spectrum") {
  const CosineMatrix cm7(7);
  CHECK(cm7.a()(0, 0) == doctest::Approx(2.0 * std::cos(2.0 * std::numbers::pi / 7.0)).epsilon(1e-15));
  for (int p = 7; p <= 99; p += 2) {
    const CosineMatrix cm = cosine_matrix(p);
    const int q = cm.q();
    const Matrix gram = cm.a().transpose() * cm.a();
    const Matrix expected = p * Matrix::Identity(q, q) - 2.0 * Matrix::Ones(q, q);
    CHECK((gram - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((cm.a() * cm.a_inv() - Matrix::Identity(q, q)).cwiseAbs().maxCoeff() < 1e-10);
    Eigen::JacobiSVD<Matrix> svd(cm.a());
    const Vector sv = svd.singularValues();
    // √p on the complement of 1 (multiplicity q - 1), 1 along 1
    for (int i = 0; i + 1 < q; ++i) CHECK(std::abs(sv[i] - std::sqrt(static_cast<double>(p))) < 1e-10);
    CHECK(std::abs(sv[q - 1] - 1.0) < 1e-10);
    CHECK(std::abs(sv[0] / sv[q - 1] - std::sqrt(static_cast<double>(p))) < 1e-10);
  }
  CHECK_THROWS_AS(cosine_matrix(8), std::invalid_argument);
  CHECK_THROWS_AS(cosine_matrix(5), std::invalid_argument);
}

TEST_CASE("population moments of a constant signal") {
  const double c = 0.4;
  const auto m = population_moments(Signal::constant(11, c));
  CHECK(m.kind == MomentKind::population);
  CHECK((m.t1 - Vector::Constant(5, 2 * c)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((m.t2 - Matrix::Constant(5, 5, 4 * c * c)).cwiseAbs().maxCoeff() < 1e-15);
  for (double v : m.t3.data()) CHECK(v == doctest::Approx(8 * c * c * c).epsilon(1e-14));
}

TEST_CASE("population moments match shift enumeration") {
  for (int p : {7, 9, 13}) {
    const Signal s = random_signal(p, 100 + p);
    const auto m = population_moments(s);
    CHECK(max_gap(m, oracle::population(s.values())) < 1e-12);
    CHECK((m.t2 - m.t2.transpose()).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(m.t3.asymmetry() < 1e-12);
    const double hat0 = oracle::dft(s.values())[0].real();
    CHECK((m.t1 - Vector::Constant(s.q(), 2.0 * hat0 / std::sqrt(static_cast<double>(p)))).cwiseAbs().maxCoeff() <
          1e-12);
  }
}

TEST_CASE("population moments are dihedral invariant") {
  const Signal s = random_signal(7, 110);
  const auto base = population_moments(s);
  for (const auto& g : dihedral_group(7)) {
    const auto m = population_moments(apply(g, s));
    CHECK((m.t1 - base.t1).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((m.t2 - base.t2).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(max_gap(m.t3, base.t3) < 1e-14);
  }
}

TEST_CASE("empirical moments match naive loops") {
  const Signal s = random_signal(9, 120);
  const auto batch = generate(s, 50, 0.3, 7);
  const auto m = empirical_moments(batch);
  CHECK(m.kind == MomentKind::raw_empirical);
  std::vector<Vector> rows;
  for (int i = 0; i < batch.n(); ++i) rows.push_back(batch.samples.row(i).transpose());
  CHECK(max_gap(m, oracle::average_powers(rows)) < 1e-12);
  CHECK(m.t3.asymmetry() == 0.0);

  const auto single = empirical_moments(RowMatrix(batch.samples.topRows(1)));
  CHECK(max_gap(single, oracle::average_powers({rows.front()})) < 1e-15);
}

TEST_CASE("balanced noiseless batch reproduces population moments") {
  const Signal s = random_signal(13, 130);
  const Matrix orbit_rows = projected_orbit(s);
  const RowMatrix samples = orbit_rows;
  const auto emp = empirical_moments(samples);
  const auto pop = population_moments(s);
  CHECK((emp.t1 - pop.t1).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((emp.t2 - pop.t2).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(max_gap(emp.t3, pop.t3) < 1e-14);
}

TEST_CASE("accumulators merge associatively") {
  const Signal s = random_signal(11, 140);
  const auto batch = generate(s, 301, 0.5, 8);
  MomentAccumulator left(5), right(5), whole(5);
  for (int i = 0; i < batch.n(); ++i) {
    std::span<const double> row(batch.samples.row(i).data(), 5);
    (i < 120 ? left : right).add(row);
    whole.add(row);
  }
  left.merge(right);
  CHECK(left.count() == 301);
  const auto a = left.finish();
  const auto b = whole.finish();
  CHECK((a.t1 - b.t1).cwiseAbs().maxCoeff() < 1e-13);
  CHECK((a.t2 - b.t2).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(max_gap(a.t3, b.t3) < 1e-13);
}

TEST_CASE("debias subtracts the Gaussian terms") {
  const Signal s = random_signal(9, 150);
  const auto raw = empirical_moments(generate(s, 80, 0.6, 9));
  const auto same = debias(raw, 0.0);
  CHECK(same.kind == MomentKind::debiased_empirical);
  CHECK((same.t2 - raw.t2).norm() == 0.0);
  CHECK(max_gap(same.t3, raw.t3) == 0.0);

  const double sigma = 0.6, var = sigma * sigma;
  const auto deb = debias(raw, sigma);
  CHECK((deb.t1 - raw.t1).norm() == 0.0);
  CHECK((deb.t2 - (raw.t2 - var * Matrix::Identity(4, 4))).cwiseAbs().maxCoeff() < 1e-15);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c) {
        const double shift = var * (raw.t1[a] * (b == c) + raw.t1[b] * (a == c) + raw.t1[c] * (a == b));
        CHECK(std::abs(deb.t3(a, b, c) - (raw.t3(a, b, c) - shift)) < 1e-15);
      }
  CHECK_THROWS_AS(debias(deb, sigma), std::invalid_argument);
  CHECK_THROWS_AS(debias(population_moments(s), sigma), std::invalid_argument);
}

TEST_CASE("pooled debiased third moment is unbiased") {
  const int p = 13, batches = 200, n = 5000;
  const double sigma = 0.5;
  const Signal s = random_signal(p, 160);
  const auto pop = population_moments(s);
  const std::size_t size = pop.t3.data().size();
  std::vector<double> sum(size, 0.0), sum_sq(size, 0.0);
  for (int r = 0; r < batches; ++r) {
    const auto deb = debias(empirical_moments(generate(s, n, sigma, 1000 + r)), sigma);
    for (std::size_t i = 0; i < size; ++i) {
      sum[i] += deb.t3.data()[i];
      sum_sq[i] += deb.t3.data()[i] * deb.t3.data()[i];
    }
  }
  double err_sq = 0.0, se_sq = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double mean = sum[i] / batches;
    const double var = (sum_sq[i] - batches * mean * mean) / (batches - 1);
    err_sq += (mean - pop.t3.data()[i]) * (mean - pop.t3.data()[i]);
    se_sq += var / batches;
  }
  const double norm = pop.t3.frobenius_norm();
  const double rel_err = std::sqrt(err_sq) / norm;
  const double rel_se = std::sqrt(se_sq) / norm;
  MESSAGE("pooled relative error " << rel_err << ", pooled standard error " << rel_se);
  CHECK(rel_err < 0.05);
  CHECK(3.0 * rel_se < 0.05);
  CHECK(rel_err < 4.0 * rel_se);
}

TEST_CASE("debiasing removes the second moment inflation") {
  const int p = 13;
  const double sigma = 1.0;
  const Signal s = random_signal(p, 170);
  const double target = population_moments(s).t2.diagonal().mean();
  int closer = 0;
  for (int seed = 0; seed < 20; ++seed) {
    const auto raw = empirical_moments(generate(s, 10000, sigma, 2000 + seed));
    const auto deb = debias(raw, sigma);
    closer += std::abs(deb.t2.diagonal().mean() - target) < std::abs(raw.t2.diagonal().mean() - target);
  }
  CHECK(closer == 20);
}

TEST_CASE("to_cosine matches direct cosine enumeration") {
  for (int p : {7, 13}) {
    const Signal s = random_signal(p, 180 + p);
    const CosineMatrix cm(p);
    const auto cos_m = to_cosine(population_moments(s), cm);
    const auto coeffs = oracle::cosine_coefficients(s.values());
    const auto direct = oracle::average_powers(coeffs);
    CHECK((cos_m.m2 - direct.t2).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(max_gap(cos_m.m3, direct) < 1e-10);
    CHECK((cos_m.t1_projected - population_moments(s).t1).norm() == 0.0);
    CHECK(cos_m.m3.asymmetry() < 1e-10);
  }
}

TEST_CASE("second cosine moment is diagonal with 2 r_k^2") {
  const Signal s = random_signal(13, 190);
  const auto polar = oracle::polar(s.values());
  const auto cos_m = to_cosine(population_moments(s), CosineMatrix(13));
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b) {
      const double expected = a == b ? 2.0 * polar.r[a] * polar.r[a] : 0.0;
      CHECK(std::abs(cos_m.m2(a, b) - expected) < 1e-12);
    }
}

TEST_CASE("constant signals have vanishing cosine moments") {
  const auto cos_m = to_cosine(population_moments(Signal::constant(9, 1.3)), CosineMatrix(9));
  CHECK(cos_m.m2.cwiseAbs().maxCoeff() < 1e-12);
  for (double v : cos_m.m3.data()) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("third cosine moment selection rules and closed forms") {
  const int p = 13, q = 6;
  const Signal s = random_signal(p, 200);
  const auto polar = oracle::polar(s.values());
  const auto direct = population_cosine_moments(s);
  int sum_rule = 0, wrap_rule = 0;
  for (int a = 1; a <= q; ++a)
    for (int b = 1; b <= q; ++b)
      for (int c = 1; c <= q; ++c) {
        const double r = polar.r[a - 1] * polar.r[b - 1] * polar.r[c - 1];
        const double pa = polar.phi[a - 1], pb = polar.phi[b - 1], pc = polar.phi[c - 1];
        double expected = 0.0;
        if (a + b + c == p) {
          expected = 2.0 * r * std::cos(pa + pb + pc);
          ++wrap_rule;
        } else if (a + b == c) {
          expected = 2.0 * r * std::cos(pa + pb - pc);
          ++sum_rule;
        } else if (a + c == b) {
          expected = 2.0 * r * std::cos(pa + pc - pb);
          ++sum_rule;
        } else if (b + c == a) {
          expected = 2.0 * r * std::cos(pb + pc - pa);
          ++sum_rule;
        }
        CHECK(std::abs(direct.m3(a - 1, b - 1, c - 1) - expected) < 1e-12);
      }
  CHECK(sum_rule > 0);
  CHECK(wrap_rule > 0);
}

TEST_CASE("transfer equivalence on random signals") {
  std::mt19937_64 rng(210);
  for (int p : {7, 13, 21}) {
    const CosineMatrix cm(p);
    for (int trial = 0; trial < 50; ++trial) {
      const Signal s(oracle::gaussian_vector(p, rng));
      const auto via_t = to_cosine(population_moments(s), cm);
      const auto direct = population_cosine_moments(s);
      CHECK((via_t.m2 - direct.m2).cwiseAbs().maxCoeff() < 1e-10);
      CHECK(max_gap(via_t.m3, direct.m3) < 1e-10);
    }
  }
}

TEST_CASE("to_cosine input validation") {
  const Signal s = random_signal(9, 220);
  const CosineMatrix cm(9);
  CHECK_THROWS_AS(to_cosine(empirical_moments(generate(s, 10, 0.1, 1)), cm), std::invalid_argument);
  auto pop = population_moments(s);
  pop.t1[0] += 1e-3;
  CHECK_THROWS_AS(to_cosine(pop, cm), std::invalid_argument);
  CHECK_THROWS_AS(to_cosine(population_moments(random_signal(11, 1)), cm), std::invalid_argument);
}

TEST_CASE("centering matches the central moments of the samples") {
  const Signal s = random_signal(9, 230);
  const auto batch = generate(s, 200, 0.2, 3);
  const auto c = center(empirical_moments(batch));
  const Vector mu = batch.samples.colwise().mean().transpose();
  std::vector<Vector> centered;
  for (int i = 0; i < batch.n(); ++i) centered.push_back(batch.samples.row(i).transpose() - mu);
  const auto ref = oracle::average_powers(centered);
  CHECK((c.c2 - ref.t2).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(max_gap(c.c3, ref) < 1e-12);
}

TEST_CASE("cosine transfer amplifies third-moment noise") {
  const int p = 13;
  Signal s = random_signal(p, 240);
  s = Signal(s.values() / s.norm());
  const CosineMatrix cm(p);
  const auto pop = population_moments(s);
  const auto pop_cos = population_cosine_moments(s);
  for (double sigma : {0.3, 0.6}) {
    std::vector<double> t_err, m_err;
    for (int seed = 0; seed < 20; ++seed) {
      const auto deb = debias(empirical_moments(generate(s, 20000, sigma, 3000 + seed)), sigma);
      t_err.push_back(relative_error(deb.t3, pop.t3));
      m_err.push_back(relative_error(to_cosine(deb, cm).m3, pop_cos.m3));
    }
    std::nth_element(t_err.begin(), t_err.begin() + 10, t_err.end());
    std::nth_element(m_err.begin(), m_err.begin() + 10, m_err.end());
    CHECK(m_err[10] > t_err[10]);
  }
}

TEST_CASE("block normalized loss") {
  const Signal s = random_signal(9, 250);
  const auto pop = population_moments(s);
  CHECK(block_normalized_loss(pop, pop) == 0.0);
  auto shifted = pop;
  shifted.t1 *= 2.0;
  CHECK(block_normalized_loss(shifted, pop) == doctest::Approx(1.0));
  const auto zero = population_moments(Signal::zeros(9));
  CHECK(block_normalized_loss(pop, zero) ==
        doctest::Approx(pop.t1.squaredNorm() + pop.t2.squaredNorm() + std::pow(pop.t3.frobenius_norm(), 2)));
}
