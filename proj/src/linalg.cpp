#include "rcomp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rcomp/rng.hpp"

namespace rcomp {

namespace {

void check_same(std::size_t a, std::size_t b, const char* what) {
    if (a != b)
        fail(ErrorKind::DimensionMismatch,
             std::string(what) + " (" + std::to_string(a) + " vs " + std::to_string(b) + ")");
}

}  // namespace

Vector zeros(std::size_t n) { return Vector(n, 0.0); }

Vector add(const Vector& a, const Vector& b) {
    check_same(a.size(), b.size(), "add");
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

Vector sub(const Vector& a, const Vector& b) {
    check_same(a.size(), b.size(), "sub");
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

Vector scale(double s, const Vector& a) {
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
    return r;
}

Vector axpy(const Vector& a, double s, const Vector& b) {
    check_same(a.size(), b.size(), "axpy");
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + s * b[i];
    return r;
}

double dot(const Vector& a, const Vector& b) {
    check_same(a.size(), b.size(), "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(const Vector& a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return std::sqrt(s);
}

double norm_inf(const Vector& a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

double dist(const Vector& a, const Vector& b) { return norm(sub(a, b)); }

Vector concat(const Vector& a, const Vector& b) {
    Vector r(a);
    r.insert(r.end(), b.begin(), b.end());
    return r;
}

Vector slice(const Vector& a, std::size_t offset, std::size_t len) {
    if (offset + len > a.size()) fail(ErrorKind::DimensionMismatch, "slice out of range");
    return Vector(a.begin() + static_cast<std::ptrdiff_t>(offset),
                  a.begin() + static_cast<std::ptrdiff_t>(offset + len));
}

bool all_finite(const Vector& a) {
    return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols)
        fail(ErrorKind::DimensionMismatch, "matrix data has " + std::to_string(data_.size()) +
                                               " entries, expected " + std::to_string(rows * cols));
    if (!all_finite(data_)) fail(ErrorKind::InvalidArgument, "matrix entries must be finite");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::diag(const Vector& d) {
    DenseMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

DenseMatrix DenseMatrix::from_rows(const std::vector<Vector>& rows) {
    if (rows.empty()) return DenseMatrix();
    std::size_t c = rows.front().size();
    std::vector<double> data;
    data.reserve(rows.size() * c);
    for (const auto& r : rows) {
        check_same(r.size(), c, "ragged rows");
        data.insert(data.end(), r.begin(), r.end());
    }
    return DenseMatrix(rows.size(), c, std::move(data));
}

DenseMatrix DenseMatrix::transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

double DenseMatrix::max_abs() const { return norm_inf(data_); }

Vector DenseMatrix::column(std::size_t j) const {
    Vector c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    check_same(a.cols(), b.rows(), "matmul");
    DenseMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

DenseMatrix madd(const DenseMatrix& a, const DenseMatrix& b) {
    check_same(a.rows(), b.rows(), "madd rows");
    check_same(a.cols(), b.cols(), "madd cols");
    return DenseMatrix(a.rows(), a.cols(), add(a.data(), b.data()));
}

DenseMatrix msub(const DenseMatrix& a, const DenseMatrix& b) {
    check_same(a.rows(), b.rows(), "msub rows");
    check_same(a.cols(), b.cols(), "msub cols");
    return DenseMatrix(a.rows(), a.cols(), sub(a.data(), b.data()));
}

DenseMatrix mscale(double s, const DenseMatrix& a) {
    return DenseMatrix(a.rows(), a.cols(), scale(s, a.data()));
}

Vector matvec(const DenseMatrix& a, const Vector& x) {
    check_same(x.size(), a.cols(), "matvec");
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

Vector matvec_t(const DenseMatrix& a, const Vector& y) {
    check_same(y.size(), a.rows(), "matvec_t");
    Vector x(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) x[j] += a(i, j) * y[i];
    return x;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) { return msub(a, b).max_abs(); }

DenseMatrix hcat(const DenseMatrix& a, const DenseMatrix& b) {
    check_same(a.rows(), b.rows(), "hcat");
    DenseMatrix c(a.rows(), a.cols() + b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j);
        for (std::size_t j = 0; j < b.cols(); ++j) c(i, a.cols() + j) = b(i, j);
    }
    return c;
}

DenseMatrix vcat(const DenseMatrix& a, const DenseMatrix& b) {
    check_same(a.cols(), b.cols(), "vcat");
    DenseMatrix c(a.rows() + b.rows(), a.cols());
    for (std::size_t j = 0; j < a.cols(); ++j) {
        for (std::size_t i = 0; i < a.rows(); ++i) c(i, j) = a(i, j);
        for (std::size_t i = 0; i < b.rows(); ++i) c(a.rows() + i, j) = b(i, j);
    }
    return c;
}

SymmetricEigen symmetric_eigen(const DenseMatrix& s, double tol, int max_sweeps) {
    check_same(s.rows(), s.cols(), "symmetric_eigen needs a square matrix");
    const std::size_t n = s.rows();
    DenseMatrix a = s;
    DenseMatrix v = DenseMatrix::identity(n);
    double fro = norm(a.data());
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (std::sqrt(off) <= tol * fro || off == 0.0) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a(p, q);
                if (apq == 0.0) continue;
                double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double sn = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - sn * vkq;
                    v(k, q) = sn * vkp + c * vkq;
                }
            }
        }
    }
    SymmetricEigen out;
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.values[i] = a(i, i);
    out.vectors = v;
    return out;
}

LinearMap::LinearMap(DenseMatrix m, double class_tol) : m_(std::move(m)), class_tol_(class_tol) {
    if (m_.rows() == 0 || m_.cols() == 0) fail(ErrorKind::InvalidArgument, "linear map needs positive dims");
    if (m_.rows() > kMaxDim || m_.cols() > kMaxDim)
        fail(ErrorKind::InvalidArgument, "linear map dims exceed " + std::to_string(kMaxDim));
    if (!all_finite(m_.data())) fail(ErrorKind::InvalidArgument, "matrix entries must be finite");
    DenseMatrix mt = m_.transpose();
    DenseMatrix mtm = matmul(mt, m_);
    DenseMatrix mmt = matmul(m_, mt);
    const DenseMatrix& small = mtm.rows() <= mmt.rows() ? mtm : mmt;
    auto eig = symmetric_eigen(small);
    double lmax = 0.0;
    for (double l : eig.values) lmax = std::max(lmax, l);
    norm_ = std::sqrt(lmax);
    iso_defect_ = max_abs_diff(mtm, DenseMatrix::identity(m_.cols()));
    coiso_defect_ = max_abs_diff(mmt, DenseMatrix::identity(m_.rows()));
    isometry_ = iso_defect_ <= class_tol_;
    coisometry_ = coiso_defect_ <= class_tol_;
}

LinearMap LinearMap::identity(std::size_t n) { return LinearMap(DenseMatrix::identity(n)); }

LinearMap LinearMap::scaled_identity(std::size_t n, double s) {
    return LinearMap(mscale(s, DenseMatrix::identity(n)));
}

bool LinearMap::is_identity(double tol) const {
    return m_.rows() == m_.cols() && max_abs_diff(m_, DenseMatrix::identity(m_.rows())) <= tol;
}

Vector apply(const LinearMap& map, const Vector& x) { return matvec(map.matrix(), x); }

Vector apply_adjoint(const LinearMap& map, const Vector& y) { return matvec_t(map.matrix(), y); }

LinearMap compose_maps(const LinearMap& outer, const LinearMap& inner) {
    return LinearMap(matmul(outer.matrix(), inner.matrix()), outer.class_tol());
}

namespace {

// returns the Rayleigh estimate of lambda_max(M^T M) from seed v, or -1 when v hits the kernel
double power_run(const DenseMatrix& m, Vector v, double tol, int max_iter) {
    double nv = norm(v);
    if (nv == 0.0) return -1.0;
    v = scale(1.0 / nv, v);
    double prev = -1.0;
    for (int it = 0; it < max_iter; ++it) {
        Vector mv = matvec(m, v);
        double lam = dot(mv, mv);
        Vector w = matvec_t(m, mv);
        double nw = norm(w);
        if (nw == 0.0) return it == 0 ? -1.0 : lam;
        if (prev >= 0.0 && std::abs(lam - prev) <= tol * lam) return lam;
        prev = lam;
        v = scale(1.0 / nw, w);
    }
    fail(ErrorKind::IterationLimit, "operator_norm did not converge in " + std::to_string(max_iter) + " iterations");
}

}  // namespace

double operator_norm(const LinearMap& map, double tol, int max_iter) {
    require(tol > 0.0, ErrorKind::InvalidArgument, "operator_norm tol must be positive");
    const DenseMatrix& m = map.matrix();
    if (m.max_abs() == 0.0) return 0.0;
    const std::size_t n = m.cols();
    double lam = power_run(m, Vector(n, 1.0), tol, max_iter);
    // fixed restart guards against a seed orthogonal to the top singular space
    SplitMix64 sm(0x5eedULL);
    Vector r(n);
    for (auto& ri : r) ri = sm.next_double() - 0.5;
    lam = std::max(lam, power_run(m, r, tol, max_iter));
    if (lam < 0.0) fail(ErrorKind::IterationLimit, "operator_norm seeds both annihilated");
    return std::sqrt(lam);
}

Vector solve(const DenseMatrix& a, const Vector& b) {
    check_same(a.rows(), a.cols(), "solve needs a square matrix");
    check_same(b.size(), a.rows(), "solve rhs");
    const std::size_t n = a.rows();
    DenseMatrix m = a;
    Vector x = b;
    double pivot_tol = kPivotRel * m.max_abs();
    if (m.max_abs() == 0.0) fail(ErrorKind::Singular, "zero matrix");
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(m(i, k)) > std::abs(m(piv, k))) piv = i;
        if (std::abs(m(piv, k)) < pivot_tol)
            fail(ErrorKind::Singular, "pivot below tolerance at column " + std::to_string(k));
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(m(k, j), m(piv, j));
            std::swap(x[k], x[piv]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            double f = m(i, k) / m(k, k);
            if (f == 0.0) continue;
            for (std::size_t j = k; j < n; ++j) m(i, j) -= f * m(k, j);
            x[i] -= f * x[k];
        }
    }
    for (std::size_t k = n; k-- > 0;) {
        double s = x[k];
        for (std::size_t j = k + 1; j < n; ++j) s -= m(k, j) * x[j];
        x[k] = s / m(k, k);
    }
    return x;
}

DenseMatrix inverse(const DenseMatrix& a) {
    const std::size_t n = a.rows();
    DenseMatrix inv(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        Vector e(n, 0.0);
        e[j] = 1.0;
        Vector c = solve(a, e);
        for (std::size_t i = 0; i < n; ++i) inv(i, j) = c[i];
    }
    return inv;
}

Svd jacobi_svd(const DenseMatrix& a, double tol, int max_sweeps) {
    const std::size_t m = a.rows(), n = a.cols();
    DenseMatrix u = a;
    DenseMatrix v = DenseMatrix::identity(n);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    alpha += u(i, p) * u(i, p);
                    beta += u(i, q) * u(i, q);
                    gamma += u(i, p) * u(i, q);
                }
                if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
                rotated = true;
                double zeta = (beta - alpha) / (2.0 * gamma);
                double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    double up = u(i, p), uq = u(i, q);
                    u(i, p) = c * up - s * uq;
                    u(i, q) = s * up + c * uq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    double vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }
    Vector sv(n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += u(i, j) * u(i, j);
        sv[j] = std::sqrt(s);
        if (sv[j] > 0.0)
            for (std::size_t i = 0; i < m; ++i) u(i, j) /= sv[j];
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sv[x] > sv[y]; });
    Svd out{DenseMatrix(m, n), Vector(n), DenseMatrix(n, n)};
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t j = order[k];
        out.s[k] = sv[j];
        for (std::size_t i = 0; i < m; ++i) out.u(i, k) = u(i, j);
        for (std::size_t i = 0; i < n; ++i) out.v(i, k) = v(i, j);
    }
    return out;
}

DenseMatrix pseudo_inverse(const LinearMap& map, double rank_tol) {
    const DenseMatrix& a = map.matrix();
    Svd svd = jacobi_svd(a);
    DenseMatrix pinv(a.cols(), a.rows());
    double smax = svd.s.empty() ? 0.0 : svd.s.front();
    if (smax == 0.0) return pinv;
    for (std::size_t k = 0; k < svd.s.size(); ++k) {
        if (svd.s[k] <= rank_tol * smax) continue;
        double inv = 1.0 / svd.s[k];
        for (std::size_t i = 0; i < a.cols(); ++i)
            for (std::size_t j = 0; j < a.rows(); ++j) pinv(i, j) += svd.v(i, k) * inv * svd.u(j, k);
    }
    return pinv;
}

DenseMatrix sqrt_psd(const DenseMatrix& s, double tol) {
    check_same(s.rows(), s.cols(), "sqrt_psd needs a square matrix");
    double scale_ref = std::max(1.0, s.max_abs());
    if (max_abs_diff(s, s.transpose()) > tol * scale_ref) fail(ErrorKind::NotSymmetric, "sqrt_psd input");
    DenseMatrix sym = mscale(0.5, madd(s, s.transpose()));
    auto eig = symmetric_eigen(sym);
    const std::size_t n = s.rows();
    DenseMatrix r(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        double l = eig.values[k];
        if (l < -tol * scale_ref) fail(ErrorKind::NotPSD, "eigenvalue " + std::to_string(l));
        double rl = std::sqrt(std::max(l, 0.0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) r(i, j) += eig.vectors(i, k) * rl * eig.vectors(j, k);
    }
    return r;
}

InnerProduct InnerProduct::standard(std::size_t n) {
    InnerProduct ip;
    ip.dim_ = n;
    ip.gram_ = DenseMatrix::identity(n);
    return ip;
}

InnerProduct InnerProduct::weighted(const LinearMap& l, double rank_tol) {
    InnerProduct ip;
    ip.weighted_ = true;
    ip.dim_ = l.cols();
    ip.l_ = l;
    DenseMatrix pinv = pseudo_inverse(l, rank_tol);
    ip.p_ker_ = msub(DenseMatrix::identity(l.cols()), matmul(pinv, l.matrix()));
    ip.gram_ = madd(matmul(l.matrix().transpose(), l.matrix()), ip.p_ker_);
    return ip;
}

double weighted_dot(const InnerProduct& ip, const Vector& x, const Vector& y) {
    check_same(x.size(), ip.dim(), "weighted_dot x");
    check_same(y.size(), ip.dim(), "weighted_dot y");
    if (ip.is_standard()) return dot(x, y);
    return dot(x, matvec(ip.gram(), y));
}

double weighted_norm(const InnerProduct& ip, const Vector& x) {
    return std::sqrt(std::max(0.0, weighted_dot(ip, x, x)));
}

}  // namespace rcomp
