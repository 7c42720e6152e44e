#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "rcomp/errors.hpp"

namespace rcomp {

constexpr std::size_t kMaxDim = 64;

using Vector = std::vector<double>;

// vector helpers
Vector zeros(std::size_t n);
Vector add(const Vector& a, const Vector& b);
Vector sub(const Vector& a, const Vector& b);
Vector scale(double s, const Vector& a);
// a + s*b
Vector axpy(const Vector& a, double s, const Vector& b);
double dot(const Vector& a, const Vector& b);
double norm(const Vector& a);
double norm_inf(const Vector& a);
double dist(const Vector& a, const Vector& b);
Vector concat(const Vector& a, const Vector& b);
Vector slice(const Vector& a, std::size_t offset, std::size_t len);
bool all_finite(const Vector& a);

class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols);
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static DenseMatrix identity(std::size_t n);
    static DenseMatrix diag(const Vector& d);
    static DenseMatrix from_rows(const std::vector<Vector>& rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    const std::vector<double>& data() const { return data_; }

    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

    DenseMatrix transpose() const;
    double max_abs() const;
    Vector column(std::size_t j) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix madd(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix msub(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix mscale(double s, const DenseMatrix& a);
Vector matvec(const DenseMatrix& a, const Vector& x);
Vector matvec_t(const DenseMatrix& a, const Vector& y);
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);
// block matrix [a b]
DenseMatrix hcat(const DenseMatrix& a, const DenseMatrix& b);
// block matrix [a; b]
DenseMatrix vcat(const DenseMatrix& a, const DenseMatrix& b);

struct SymmetricEigen {
    Vector values;
    DenseMatrix vectors;  // columns are eigenvectors
};

// Cyclic Jacobi; input must be symmetric.
SymmetricEigen symmetric_eigen(const DenseMatrix& s, double tol = 1e-14, int max_sweeps = 100);

class LinearMap {
public:
    static constexpr double kClassTol = 1e-10;

    LinearMap() = default;
    explicit LinearMap(DenseMatrix m, double class_tol = kClassTol);

    static LinearMap identity(std::size_t n);
    static LinearMap scaled_identity(std::size_t n, double s);

    const DenseMatrix& matrix() const { return m_; }
    std::size_t rows() const { return m_.rows(); }
    std::size_t cols() const { return m_.cols(); }
    double norm_estimate() const { return norm_; }
    bool is_isometry() const { return isometry_; }
    bool is_coisometry() const { return coisometry_; }
    double isometry_defect() const { return iso_defect_; }
    double coisometry_defect() const { return coiso_defect_; }
    double class_tol() const { return class_tol_; }
    bool is_identity(double tol = 0.0) const;

    LinearMap adjoint() const { return LinearMap(m_.transpose(), class_tol_); }

private:
    DenseMatrix m_;
    double norm_ = 0.0;
    bool isometry_ = false;
    bool coisometry_ = false;
    double iso_defect_ = 0.0;
    double coiso_defect_ = 0.0;
    double class_tol_ = kClassTol;
};

// call as rcomp::apply; an unqualified call with std::vector arguments also finds std::apply
Vector apply(const LinearMap& map, const Vector& x);
Vector apply_adjoint(const LinearMap& map, const Vector& y);
LinearMap compose_maps(const LinearMap& outer, const LinearMap& inner);

// Power iteration on M^T M from the normalized all-ones seed.
double operator_norm(const LinearMap& map, double tol = 1e-12, int max_iter = 100000);

constexpr double kPivotRel = 1e-12;
constexpr double kSolverTol = 1e-10;
// Gaussian elimination with partial pivoting.
Vector solve(const DenseMatrix& a, const Vector& b);
DenseMatrix inverse(const DenseMatrix& a);

struct Svd {
    DenseMatrix u;  // rows x k
    Vector s;       // k singular values, descending
    DenseMatrix v;  // cols x k
};

// One-sided Jacobi, k = cols.
Svd jacobi_svd(const DenseMatrix& a, double tol = 1e-15, int max_sweeps = 100);
DenseMatrix pseudo_inverse(const LinearMap& map, double rank_tol = 1e-10);
DenseMatrix sqrt_psd(const DenseMatrix& s, double tol = 1e-10);

class InnerProduct {
public:
    // standard inner product on R^n
    static InnerProduct standard(std::size_t n);
    // <Lx,Ly> + <x, P_kerL y>
    static InnerProduct weighted(const LinearMap& l, double rank_tol = 1e-10);

    bool is_standard() const { return !weighted_; }
    std::size_t dim() const { return dim_; }
    const DenseMatrix& gram() const { return gram_; }
    const DenseMatrix& kernel_projector() const { return p_ker_; }
    const LinearMap& map() const { return l_; }

private:
    bool weighted_ = false;
    std::size_t dim_ = 0;
    LinearMap l_;
    DenseMatrix p_ker_;
    DenseMatrix gram_;
};

double weighted_dot(const InnerProduct& ip, const Vector& x, const Vector& y);
double weighted_norm(const InnerProduct& ip, const Vector& x);

}  // namespace rcomp
