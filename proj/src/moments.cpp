#include "pmra/moments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pmra {

double Tensor3::frobenius_norm() const {
  double acc = 0.0;
  for (double v : data_) acc += v * v;
  return std::sqrt(acc);
}

double Tensor3::asymmetry() const {
  double worst = 0.0;
  for (int a = 0; a < dim_; ++a) {
    for (int b = 0; b < dim_; ++b) {
      for (int c = 0; c < dim_; ++c) {
        const double v = (*this)(a, b, c);
        for (double w : {(*this)(a, c, b), (*this)(b, a, c), (*this)(b, c, a), (*this)(c, a, b),
                         (*this)(c, b, a)}) {
          worst = std::max(worst, std::abs(v - w));
        }
      }
    }
  }
  return worst;
}

Tensor3& Tensor3::operator+=(const Tensor3& other) {
  std::transform(data_.begin(), data_.end(), other.data_.begin(), data_.begin(), std::plus<>{});
  return *this;
}

Tensor3& Tensor3::operator-=(const Tensor3& other) {
  std::transform(data_.begin(), data_.end(), other.data_.begin(), data_.begin(), std::minus<>{});
  return *this;
}

Tensor3& Tensor3::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

namespace {

void mirror(Tensor3& t, int a, int b, int c, double v) {
  t(a, b, c) = v;
  t(a, c, b) = v;
  t(b, a, c) = v;
  t(b, c, a) = v;
  t(c, a, b) = v;
  t(c, b, a) = v;
}

// scale * Σ_rows x⊗x⊗x, evaluated on a <= b <= c and mirrored.
Tensor3 third_power_sum(const Matrix& rows, double scale) {
  const int q = static_cast<int>(rows.cols());
  Tensor3 out(q);
  Vector pair(rows.rows());
  for (int a = 0; a < q; ++a) {
    for (int b = a; b < q; ++b) {
      pair = rows.col(a).cwiseProduct(rows.col(b));
      for (int c = b; c < q; ++c) {
        mirror(out, a, b, c, scale * pair.dot(rows.col(c)));
      }
    }
  }
  return out;
}

}  // namespace

Tensor3 multilinear(const Matrix& b, const Tensor3& t) {
  const int q = t.dim();
  Tensor3 s1(q), s2(q), s3(q);
  // contract the last mode, then the middle, then the first
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j)
      for (int c = 0; c < q; ++c) {
        double acc = 0.0;
        for (int k = 0; k < q; ++k) acc += b(c, k) * t(i, j, k);
        s1(i, j, c) = acc;
      }
  for (int i = 0; i < q; ++i)
    for (int bb = 0; bb < q; ++bb)
      for (int c = 0; c < q; ++c) {
        double acc = 0.0;
        for (int j = 0; j < q; ++j) acc += b(bb, j) * s1(i, j, c);
        s2(i, bb, c) = acc;
      }
  for (int a = 0; a < q; ++a)
    for (int bb = 0; bb < q; ++bb)
      for (int c = 0; c < q; ++c) {
        double acc = 0.0;
        for (int i = 0; i < q; ++i) acc += b(a, i) * s2(i, bb, c);
        s3(a, bb, c) = acc;
      }
  return s3;
}

CosineMatrix::CosineMatrix(int p) : p_(p) {
  check_grid_size(p);
  const int q = (p - 1) / 2;
  a_.resize(q, q);
  for (int j = 1; j <= q; ++j) {
    for (int k = 1; k <= q; ++k) {
      a_(j - 1, k - 1) = 2.0 * std::cos(2.0 * std::numbers::pi * ((j * k) % p) / p);
    }
  }
  a_inv_ = a_.partialPivLu().solve(Matrix::Identity(q, q));
  const double residual = (a_ * a_inv_ - Matrix::Identity(q, q)).cwiseAbs().rowwise().sum().maxCoeff();
  if (!(residual < 1e-10)) {
    throw std::runtime_error("cosine matrix inverse failed verification");
  }
}

CosineMatrix cosine_matrix(int p) { return CosineMatrix(p); }

MomentSet population_moments(const Signal& s) {
  const Matrix x = projected_orbit(s);
  const double inv_p = 1.0 / s.p();
  MomentSet m;
  m.q = s.q();
  m.t1 = x.colwise().sum().transpose() * inv_p;
  m.t2 = x.transpose() * x * inv_p;
  m.t3 = third_power_sum(x, inv_p);
  m.kind = MomentKind::population;
  return m;
}

MomentAccumulator::MomentAccumulator(int q)
    : q_(q),
      s1_(Vector::Zero(q)),
      s2_(Matrix::Zero(q, q)),
      s3_(static_cast<std::size_t>(q) * (q + 1) * (q + 2) / 6, 0.0) {}

void MomentAccumulator::add(std::span<const double> y) {
  if (static_cast<int>(y.size()) != q_) {
    throw std::invalid_argument("moment accumulator: sample length mismatch");
  }
  std::size_t idx = 0;
  for (int a = 0; a < q_; ++a) {
    s1_[a] += y[a];
    for (int b = a; b < q_; ++b) {
      const double ab = y[a] * y[b];
      s2_(a, b) += ab;
      for (int c = b; c < q_; ++c) {
        s3_[idx++] += ab * y[c];
      }
    }
  }
  ++count_;
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
  if (other.q_ != q_) {
    throw std::invalid_argument("moment accumulator: dimension mismatch");
  }
  s1_ += other.s1_;
  s2_ += other.s2_;
  for (std::size_t i = 0; i < s3_.size(); ++i) s3_[i] += other.s3_[i];
  count_ += other.count_;
}

MomentSet MomentAccumulator::finish() const {
  if (count_ == 0) {
    throw std::logic_error("moment accumulator: no samples");
  }
  const double inv_n = 1.0 / static_cast<double>(count_);
  MomentSet m;
  m.q = q_;
  m.kind = MomentKind::raw_empirical;
  m.t1 = s1_ * inv_n;
  m.t2 = Matrix(q_, q_);
  m.t3 = Tensor3(q_);
  std::size_t idx = 0;
  for (int a = 0; a < q_; ++a) {
    for (int b = a; b < q_; ++b) {
      m.t2(a, b) = m.t2(b, a) = s2_(a, b) * inv_n;
      for (int c = b; c < q_; ++c) {
        mirror(m.t3, a, b, c, s3_[idx++] * inv_n);
      }
    }
  }
  return m;
}

MomentSet empirical_moments(const RowMatrix& samples) {
  if (samples.rows() < 1) {
    throw std::invalid_argument("empirical moments: need at least one sample");
  }
  MomentAccumulator acc(static_cast<int>(samples.cols()));
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    acc.add(std::span<const double>(samples.row(i).data(), static_cast<std::size_t>(samples.cols())));
  }
  return acc.finish();
}

MomentSet empirical_moments(const ObservationBatch& batch) { return empirical_moments(batch.samples); }

MomentSet debias(const MomentSet& raw, double sigma) {
  if (raw.kind != MomentKind::raw_empirical) {
    throw std::invalid_argument("debias: expected raw empirical moments");
  }
  const int q = raw.q;
  const double var = sigma * sigma;
  MomentSet out = raw;
  out.kind = MomentKind::debiased_empirical;
  out.t2.diagonal().array() -= var;
  const Vector& mu = raw.t1;
  for (int a = 0; a < q; ++a) {
    for (int b = 0; b < q; ++b) {
      for (int c = 0; c < q; ++c) {
        double correction = 0.0;
        if (b == c) correction += mu[a];
        if (a == c) correction += mu[b];
        if (a == b) correction += mu[c];
        out.t3(a, b, c) -= var * correction;
      }
    }
  }
  return out;
}

CenteredMoments center(const MomentSet& m) {
  const int q = m.q;
  const Vector& mu = m.t1;
  CenteredMoments out;
  out.c2 = m.t2 - mu * mu.transpose();
  out.c3 = Tensor3(q);
  for (int a = 0; a < q; ++a) {
    for (int b = 0; b < q; ++b) {
      for (int c = 0; c < q; ++c) {
        out.c3(a, b, c) = m.t3(a, b, c) - mu[a] * m.t2(b, c) - mu[b] * m.t2(a, c) -
                          mu[c] * m.t2(a, b) + 2.0 * mu[a] * mu[b] * mu[c];
      }
    }
  }
  return out;
}

CosineMomentSet to_cosine(const MomentSet& m, const CosineMatrix& cm) {
  if (m.kind == MomentKind::raw_empirical) {
    throw std::invalid_argument("to_cosine: raw empirical moments must be debiased first");
  }
  if (m.q != cm.q()) {
    throw std::invalid_argument("to_cosine: dimension mismatch");
  }
  if (m.kind == MomentKind::population) {
    const double mean = m.t1.mean();
    const double deviation = (m.t1.array() - mean).abs().maxCoeff();
    const double scale = std::max(m.t1.norm(), std::sqrt(m.t2.norm()));
    if (deviation > 1e-9 * scale) {
      throw std::invalid_argument("to_cosine: population first moment is not a multiple of the ones vector");
    }
  }
  const CenteredMoments centered = center(m);
  const Matrix b = std::sqrt(static_cast<double>(cm.p())) * cm.a_inv();
  CosineMomentSet out;
  out.q = m.q;
  out.t1_projected = m.t1;
  out.m2 = b * centered.c2 * b.transpose();
  out.m3 = multilinear(b, centered.c3);
  return out;
}

double block_normalized_loss(const MomentSet& model, const MomentSet& target) {
  if (model.q != target.q) {
    throw std::invalid_argument("block_normalized_loss: dimension mismatch");
  }
  auto normalized = [](double diff2, double ref2) { return ref2 > 0.0 ? diff2 / ref2 : diff2; };
  return normalized((model.t1 - target.t1).squaredNorm(), target.t1.squaredNorm()) +
         normalized((model.t2 - target.t2).squaredNorm(), target.t2.squaredNorm()) +
         normalized(std::pow((model.t3 - target.t3).frobenius_norm(), 2),
                    std::pow(target.t3.frobenius_norm(), 2));
}

Matrix cosine_coefficients(const Signal& s) {
  const int p = s.p();
  const int q = s.q();
  const ComplexVector spectrum = dft(s);
  Matrix c(p, q);
  for (int l = 0; l < p; ++l) {
    for (int k = 1; k <= q; ++k) {
      const double angle = -2.0 * std::numbers::pi * ((static_cast<long>(k) * l) % p) / p;
      c(l, k - 1) = 2.0 * (spectrum[k] * std::complex<double>(std::cos(angle), std::sin(angle))).real();
    }
  }
  return c;
}

CosineMomentSet population_cosine_moments(const Signal& s) {
  const Matrix c = cosine_coefficients(s);
  const double inv_p = 1.0 / s.p();
  CosineMomentSet out;
  out.q = s.q();
  out.t1_projected = Vector::Constant(s.q(), 2.0 * s.values().mean());
  out.m2 = c.transpose() * c * inv_p;
  out.m3 = third_power_sum(c, inv_p);
  return out;
}

}  // namespace pmra
