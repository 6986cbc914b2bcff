#include "ohrr/mcsim.hpp"

#include <cmath>
#include <numeric>

#include "ohrr/matcore.hpp"
#include "ohrr/rng.hpp"

namespace ohrr {

namespace {

Matrix sym_sqrt(const SymMat& a) {
  const EigenDecomp d = sym_eig(a);
  const Vector s = d.values.cwiseMax(0.0).cwiseSqrt();
  return d.vectors * s.asDiagonal() * d.vectors.transpose();
}

struct Accum {
  Matrix s_e;      // sum err err^T
  Matrix s_y;      // sum y y^T
  Matrix s_yv;     // sum (y - E[y|v])(...)^T
  Matrix s_xv;     // sum (x - E[x|v])(...)^T
  Matrix w4_e;     // sum vec(ee^T) vec(ee^T)^T
  Matrix w4_yv;    // entrywise squares sum of (r r^T)
  Matrix w4_xuv;   // entrywise squares sum of (e e^T)
  Matrix s_ew;     // sum err w^T
  Matrix q_ew;     // sum (err_i w_j)^2
  long n = 0;

  explicit Accum(int m, int k)
      : s_e(Matrix::Zero(m, m)),
        s_y(Matrix::Zero(m, m)),
        s_yv(Matrix::Zero(m, m)),
        s_xv(Matrix::Zero(m, m)),
        w4_e(Matrix::Zero(m * m, m * m)),
        w4_yv(Matrix::Zero(m, m)),
        w4_xuv(Matrix::Zero(m, m)),
        s_ew(Matrix::Zero(m, std::max(k, 1))),
        q_ew(Matrix::Zero(m, std::max(k, 1))) {}

  void merge(const Accum& o) {
    s_e += o.s_e;
    s_y += o.s_y;
    s_yv += o.s_yv;
    s_xv += o.s_xv;
    w4_e += o.w4_e;
    w4_yv += o.w4_yv;
    w4_xuv += o.w4_xuv;
    s_ew += o.s_ew;
    q_ew += o.q_ew;
    n += o.n;
  }
};

struct Model {
  Matrix ly, ln;          // symmetric square roots of K_Y, K_N
  Matrix lzv, lzu;        // diagonal square roots of channel noises
  Matrix gain_x_uv;       // m x k, E[X|W] = gain * W
  Matrix gain_y_v;        // m x rv
  Matrix gain_x_v;        // m x rv
  int m = 0, rv = 0, ru = 0, k = 0;
};

Model build_model(const CanonicalInstance& inst, const TestChannels& ch) {
  Model md;
  md.m = inst.m;
  md.rv = static_cast<int>(ch.pv.rows());
  md.ru = static_cast<int>(ch.pu.rows());
  md.k = md.ru + md.rv;
  md.ly = sym_sqrt(inst.ky);
  md.ln = sym_sqrt(inst.kn);
  if (md.rv > 0) md.lzv = ch.kzv.mat().cwiseSqrt();
  if (md.ru > 0) md.lzu = ch.kzu.mat().cwiseSqrt();

  const Matrix ky = inst.ky.mat();
  const Matrix kx = inst.kx.mat();
  if (md.k > 0) {
    Matrix kw(md.k, md.k);
    Matrix cxw(md.m, md.k);
    if (md.ru > 0) {
      kw.topLeftCorner(md.ru, md.ru) =
          ch.pu * kx * ch.pu.transpose() + ch.kzu.mat();
      cxw.leftCols(md.ru) = kx * ch.pu.transpose();
    }
    if (md.rv > 0) {
      kw.bottomRightCorner(md.rv, md.rv) =
          ch.pv * ky * ch.pv.transpose() + ch.kzv.mat();
      cxw.rightCols(md.rv) = ky * ch.pv.transpose();
    }
    if (md.ru > 0 && md.rv > 0) {
      kw.topRightCorner(md.ru, md.rv) = ch.pu * ky * ch.pv.transpose();
      kw.bottomLeftCorner(md.rv, md.ru) =
          kw.topRightCorner(md.ru, md.rv).transpose();
    }
    md.gain_x_uv = cxw * kw.inverse();
  } else {
    md.gain_x_uv = Matrix::Zero(md.m, 0);
  }
  if (md.rv > 0) {
    const Matrix kv = ch.pv * ky * ch.pv.transpose() + ch.kzv.mat();
    md.gain_y_v = ky * ch.pv.transpose() * kv.inverse();
    md.gain_x_v = md.gain_y_v;  // cov(X, V) = cov(Y, V); X = Y + N, N fresh
  } else {
    md.gain_y_v = Matrix::Zero(md.m, 0);
    md.gain_x_v = Matrix::Zero(md.m, 0);
  }
  return md;
}

Accum run_chunk(const TestChannels& ch,
                const Model& md, const SimConfig& cfg, long chunk) {
  Accum acc(md.m, md.k);
  const long begin = chunk * cfg.chunk_size;
  const long end = std::min(begin + cfg.chunk_size, cfg.num_samples);
  const GaussianStream gs(cfg.seed, static_cast<std::uint64_t>(chunk));
  const int nrm = 2 * md.m + md.rv + md.ru;
  std::vector<double> buf(static_cast<std::size_t>(nrm));
  Vector xi_y(md.m), xi_n(md.m), zeta_v(md.rv), zeta_u(md.ru);

  for (long i = begin; i < end; ++i) {
    gs.fill_normals(static_cast<std::uint64_t>(i - begin), buf.data(), nrm);
    int off = 0;
    for (int j = 0; j < md.m; ++j) xi_y(j) = buf[static_cast<std::size_t>(off++)];
    for (int j = 0; j < md.m; ++j) xi_n(j) = buf[static_cast<std::size_t>(off++)];
    for (int j = 0; j < md.rv; ++j) zeta_v(j) = buf[static_cast<std::size_t>(off++)];
    for (int j = 0; j < md.ru; ++j) zeta_u(j) = buf[static_cast<std::size_t>(off++)];

    const Vector y = md.ly * xi_y;
    const Vector x = y + md.ln * xi_n;
    Vector w(md.k);
    if (md.ru > 0) w.head(md.ru) = ch.pu * x + md.lzu * zeta_u;
    Vector v(md.rv);
    if (md.rv > 0) {
      v = ch.pv * y + md.lzv * zeta_v;
      w.tail(md.rv) = v;
    }

    const Vector xhat = md.k > 0 ? Vector(md.gain_x_uv * w)
                                 : Vector(Vector::Zero(md.m));
    const Vector err = x - xhat;
    const Vector ryv = md.rv > 0 ? Vector(y - md.gain_y_v * v) : y;
    const Vector rxv = md.rv > 0 ? Vector(x - md.gain_x_v * v) : x;

    const Matrix ee = err * err.transpose();
    acc.s_e += ee;
    acc.s_y += y * y.transpose();
    const Matrix ryy = ryv * ryv.transpose();
    acc.s_yv += ryy;
    acc.s_xv += rxv * rxv.transpose();
    const Eigen::Map<const Vector> vec_ee(ee.data(), ee.size());
    acc.w4_e += vec_ee * vec_ee.transpose();
    acc.w4_yv += ryy.cwiseProduct(ryy);
    acc.w4_xuv += ee.cwiseProduct(ee);
    if (md.k > 0) {
      const Matrix ew = err * w.transpose();
      acc.s_ew += ew;
      acc.q_ew += ew.cwiseProduct(ew);
    }
    ++acc.n;
  }
  return acc;
}

SimReport finalize(const CanonicalInstance& inst, const TestChannels& ch,
                   const SymMat& d, const Accum& acc) {
  const int m = inst.m;
  const double n = static_cast<double>(acc.n);
  SimReport rep;
  rep.covs.n = acc.n;
  rep.covs.y = sym(acc.s_y / n);
  rep.covs.y_given_v = sym(acc.s_yv / n);
  rep.covs.x_given_v = sym(acc.s_xv / n);
  rep.covs.x_given_uv = sym(acc.s_e / n);
  rep.emp_err_cov = rep.covs.x_given_uv;
  rep.emp_ky_given_v = rep.covs.y_given_v;
  rep.emp_kx_given_uv = rep.covs.x_given_uv;

  // Directional 3-sigma test along the eigendirections of (Sigma_hat - D).
  const EigenDecomp gap = sym_eig(sym(rep.emp_err_cov.mat() - d.mat()));
  rep.pass = true;
  for (int i = 0; i < m; ++i) {
    const Vector z = gap.vectors.col(i);
    const Matrix zz = z * z.transpose();
    const Eigen::Map<const Vector> vec_zz(zz.data(), zz.size());
    const double m2 = z.dot(rep.emp_err_cov.mat() * z);
    const double m4 = vec_zz.dot((acc.w4_e / n) * vec_zz);
    const double var = std::max(m4 - m2 * m2, 0.0);
    DirectionalSlack ds;
    ds.direction = z;
    ds.slack = z.dot(d.mat() * z) - m2;
    ds.stderr_ = std::sqrt(var / n);
    if (ds.slack < -3.0 * ds.stderr_) rep.pass = false;
    rep.directional_slack.push_back(ds);
  }

  // Entrywise 5-sigma agreement with the analytic conditional covariances.
  const InducedConditionals ind = induced_conditionals(inst, ch);
  const auto check_entries = [&](const Matrix& emp, const Matrix& w4,
                                 const Matrix& target, const char* what) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        const double mean = emp(i, j);
        const double var = std::max(w4(i, j) / n - mean * mean, 0.0);
        const double se = std::sqrt(var / n);
        if (std::abs(mean - target(i, j)) > 5.0 * se + 1e-12)
          throw Error(ErrorKind::ChannelModelMismatch,
                      std::string(what) +
                          " disagrees with the analytic conditional beyond "
                          "5 standard errors");
      }
  };
  check_entries(rep.covs.y_given_v.mat(), acc.w4_yv, ind.ky_given_v.mat(),
                "empirical K_{Y|V}");
  check_entries(rep.covs.x_given_uv.mat(), acc.w4_xuv, ind.kx_given_uv.mat(),
                "empirical K_{X|U,V}");

  const auto rates = empirical_rates(rep.covs);
  rep.r1_emp = rates.first;
  rep.r2_emp = rates.second;

  const int k = static_cast<int>(acc.s_ew.cols());
  if (k > 0 && acc.s_ew.size() > 0) {
    rep.err_uv_corr = acc.s_ew / n;
    rep.err_uv_stderr = Matrix::Zero(m, k);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < k; ++j) {
        const double mean = rep.err_uv_corr(i, j);
        const double var = std::max(acc.q_ew(i, j) / n - mean * mean, 0.0);
        rep.err_uv_stderr(i, j) = std::sqrt(var / n);
      }
  }
  return rep;
}

}  // namespace

SimReport simulate_scheme_ordered(const CanonicalInstance& inst,
                                  const TestChannels& ch, const SymMat& d,
                                  const SimConfig& cfg,
                                  const std::vector<long>& chunk_order) {
  if (cfg.num_samples < 1000)
    throw Error(ErrorKind::InvalidMatrix,
                "num_samples must be >= 1000 for the statistical checks");
  const Model md = build_model(inst, ch);
  const long nchunks = (cfg.num_samples + cfg.chunk_size - 1) / cfg.chunk_size;
  std::vector<Accum> parts(static_cast<std::size_t>(nchunks),
                           Accum(md.m, md.k));
  for (const long c : chunk_order)
    parts[static_cast<std::size_t>(c)] = run_chunk(ch, md, cfg, c);
  Accum total(md.m, md.k);
  for (long c = 0; c < nchunks; ++c)  // merge in fixed chunk-index order
    total.merge(parts[static_cast<std::size_t>(c)]);
  return finalize(inst, ch, d, total);
}

SimReport simulate_scheme(const CanonicalInstance& inst, const TestChannels& ch,
                          const SymMat& d, const SimConfig& cfg) {
  const long nchunks = (cfg.num_samples + cfg.chunk_size - 1) / cfg.chunk_size;
  std::vector<long> order(static_cast<std::size_t>(nchunks));
  std::iota(order.begin(), order.end(), 0L);
  return simulate_scheme_ordered(inst, ch, d, cfg, order);
}

std::pair<double, double> empirical_rates(const SampleCovs& covs) {
  const auto safe_ld = [](const SymMat& a, const char* what) {
    try {
      return logdet2(a);
    } catch (const Error&) {
      throw Error(ErrorKind::SingularSampleCovariance, what);
    }
  };
  const double r2 = 0.5 * (safe_ld(covs.y, "sample K_Y") -
                           safe_ld(covs.y_given_v, "sample K_{Y|V}"));
  const double r1 = 0.5 * (safe_ld(covs.x_given_v, "sample K_{X|V}") -
                           safe_ld(covs.x_given_uv, "sample K_{X|U,V}"));
  return {r1, r2};
}

}  // namespace ohrr
