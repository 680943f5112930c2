#include "lodadapt/linalg.hpp"

#include "lodadapt/error.hpp"

#include <cholmod.h>

#include <cstring>
#include <list>
#include <string>
#include <vector>

namespace lodadapt {

namespace {

// Symbolic analyses of recently seen sparsity patterns, per thread. Patches
// of equal shape share their pattern, so most factorizations skip ordering.
class AnalysisCache {
public:
  ~AnalysisCache() {
    for (Entry& e : entries_)
      cholmod_free_factor(&e.symbolic, &common_);
    cholmod_finish(&common_);
  }

  AnalysisCache() { cholmod_start(&common_); }

  /// Copy of the cached symbolic factor for this pattern, or null.
  cholmod_factor* find(const cholmod_sparse& s, cholmod_common* c) {
    for (auto it = entries_.begin(); it != entries_.end(); ++it)
      if (matches(*it, s)) {
        entries_.splice(entries_.begin(), entries_, it);
        return cholmod_copy_factor(entries_.front().symbolic, c);
      }
    return nullptr;
  }

  void insert(const cholmod_sparse& s, const cholmod_factor* symbolic) {
    if (entries_.size() >= kCapacity) {
      cholmod_free_factor(&entries_.back().symbolic, &common_);
      entries_.pop_back();
    }
    Entry e;
    const int* p = static_cast<const int*>(s.p);
    const int* i = static_cast<const int*>(s.i);
    e.n = s.nrow;
    e.p.assign(p, p + s.ncol + 1);
    e.i.assign(i, i + p[s.ncol]);
    e.symbolic = cholmod_copy_factor(const_cast<cholmod_factor*>(symbolic), &common_);
    entries_.push_front(std::move(e));
  }

private:
  struct Entry {
    size_t n = 0;
    std::vector<int> p, i;
    cholmod_factor* symbolic = nullptr;
  };

  static bool matches(const Entry& e, const cholmod_sparse& s) {
    const int* p = static_cast<const int*>(s.p);
    if (e.n != s.nrow || e.p.size() != s.ncol + 1 || e.i.size() != static_cast<size_t>(p[s.ncol]))
      return false;
    return std::memcmp(e.p.data(), p, e.p.size() * sizeof(int)) == 0 &&
           std::memcmp(e.i.data(), s.i, e.i.size() * sizeof(int)) == 0;
  }

  static constexpr size_t kCapacity = 32;
  cholmod_common common_{};
  std::list<Entry> entries_;
};

AnalysisCache& analysis_cache() {
  thread_local AnalysisCache cache;
  return cache;
}

cholmod_dense view(const Eigen::MatrixXd& m) {
  cholmod_dense d{};
  d.nrow = m.rows();
  d.ncol = m.cols();
  d.nzmax = m.size();
  d.d = m.rows();
  d.x = const_cast<double*>(m.data());
  d.xtype = CHOLMOD_REAL;
  d.dtype = CHOLMOD_DOUBLE;
  return d;
}

} // namespace

struct SparseCholesky::Impl {
  cholmod_common common{};
  cholmod_factor* factor = nullptr;
  int n = 0;

  Impl() { cholmod_start(&common); }
  ~Impl() {
    if (factor)
      cholmod_free_factor(&factor, &common);
    cholmod_finish(&common);
  }

  Eigen::MatrixXd run(int sys, const Eigen::MatrixXd& b) {
    if (b.rows() != n)
      throw SolverError("right-hand side has " + std::to_string(b.rows()) + " rows, expected " +
                        std::to_string(n));
    if (b.cols() == 0 || n == 0)
      return Eigen::MatrixXd(b.rows(), b.cols());
    cholmod_dense rhs = view(b);
    cholmod_dense* x = cholmod_solve(sys, factor, &rhs, &common);
    if (!x)
      throw SolverError("sparse triangular solve failed");
    Eigen::MatrixXd out = Eigen::Map<Eigen::MatrixXd>(static_cast<double*>(x->x), n, b.cols());
    cholmod_free_dense(&x, &common);
    return out;
  }
};

SparseCholesky::SparseCholesky(const Eigen::SparseMatrix<double>& a) : impl_(std::make_unique<Impl>()) {
  if (a.rows() != a.cols())
    throw SolverError("Cholesky factorization of a non-square matrix");
  impl_->n = static_cast<int>(a.rows());
  impl_->common.print = 0;
  // Simplicial LLᵀ: no BLAS underneath, so results do not depend on the BLAS
  // build or its threading, and each instance stays single-threaded.
  impl_->common.supernodal = CHOLMOD_SIMPLICIAL;
  impl_->common.final_ll = 1;
  if (impl_->n == 0)
    return;

  Eigen::SparseMatrix<double> lower = a.triangularView<Eigen::Lower>();
  lower.makeCompressed();
  cholmod_sparse s{};
  s.nrow = lower.rows();
  s.ncol = lower.cols();
  s.nzmax = lower.nonZeros();
  s.p = lower.outerIndexPtr();
  s.i = lower.innerIndexPtr();
  s.x = lower.valuePtr();
  s.stype = -1;
  s.itype = CHOLMOD_INT;
  s.xtype = CHOLMOD_REAL;
  s.dtype = CHOLMOD_DOUBLE;
  s.sorted = 1;
  s.packed = 1;

  impl_->factor = analysis_cache().find(s, &impl_->common);
  if (!impl_->factor) {
    impl_->factor = cholmod_analyze(&s, &impl_->common);
    if (!impl_->factor)
      throw SolverError("sparse Cholesky analysis failed");
    analysis_cache().insert(s, impl_->factor);
  }
  cholmod_factorize(&s, impl_->factor, &impl_->common);
  if (impl_->common.status == CHOLMOD_NOT_POSDEF || impl_->factor->minor < impl_->factor->n)
    throw SolverError("matrix is not positive definite (pivot " +
                      std::to_string(impl_->factor->minor) + " of " + std::to_string(impl_->n) + ")");
  if (impl_->common.status < CHOLMOD_OK)
    throw SolverError("sparse Cholesky factorization failed");
}

SparseCholesky::~SparseCholesky() = default;
SparseCholesky::SparseCholesky(SparseCholesky&&) noexcept = default;
SparseCholesky& SparseCholesky::operator=(SparseCholesky&&) noexcept = default;

int SparseCholesky::size() const { return impl_->n; }

Eigen::MatrixXd SparseCholesky::solve(const Eigen::MatrixXd& b) const { return impl_->run(CHOLMOD_A, b); }

Eigen::MatrixXd SparseCholesky::forward(const Eigen::MatrixXd& b) const {
  return impl_->run(CHOLMOD_L, impl_->run(CHOLMOD_P, b));
}

Eigen::MatrixXd SparseCholesky::backward(const Eigen::MatrixXd& y) const {
  return impl_->run(CHOLMOD_Pt, impl_->run(CHOLMOD_Lt, y));
}

} // namespace lodadapt
