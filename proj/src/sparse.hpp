#ifndef NEUROFEM_SPARSE_HPP
#define NEUROFEM_SPARSE_HPP

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace neurofem {

struct StructuralError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Compressed sparse row matrix. Within each row, column indices are strictly
// increasing; no duplicate entries.
struct CsrMatrix {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<std::size_t> row_ptr;  // length n_rows + 1
    std::vector<std::size_t> col_idx;
    std::vector<double> values;

    std::size_t nnz() const { return values.size(); }
    double at(std::size_t i, std::size_t j) const;
    CsrMatrix transposed() const;
    bool is_symmetric(double tol = 1e-12) const;
};

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

// Duplicates at the same (row, col) are summed.
CsrMatrix csr_from_triplets(const std::vector<Triplet>& entries,
                            std::size_t n_rows, std::size_t n_cols);

CsrMatrix csr_identity(std::size_t n);

std::vector<double> spmv(const CsrMatrix& a, const std::vector<double>& x);

// ||b - A x||_2 / ||b||_2
double rel_residual(const CsrMatrix& a, const std::vector<double>& x,
                    const std::vector<double>& b);

struct SolveResult {
    std::vector<double> x;
    std::size_t iterations = 0;
    double final_rel_residual = 0.0;
    bool converged = false;
};

// Unpreconditioned conjugate gradient; A must be symmetric positive definite.
SolveResult cg_solve(const CsrMatrix& a, const std::vector<double>& b,
                     double tol = 1e-12, std::size_t max_iter = 0);

// Matrix Market coordinate format, real, general or symmetric (expanded on
// read). 1-based indices on disk.
CsrMatrix mm_read(std::istream& in);
void mm_write(const CsrMatrix& a, std::ostream& out);
CsrMatrix mm_read_file(const std::string& path);
void mm_write_file(const CsrMatrix& a, const std::string& path);

double norm2(const std::vector<double>& v);
double dot(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace neurofem

#endif
