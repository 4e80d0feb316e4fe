#include "sparse.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace neurofem {

double CsrMatrix::at(std::size_t i, std::size_t j) const {
    if (i >= n_rows || j >= n_cols) throw StructuralError("CsrMatrix::at: index out of range");
    auto begin = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
    auto end = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
    auto it = std::lower_bound(begin, end, j);
    if (it == end || *it != j) return 0.0;
    return values[static_cast<std::size_t>(it - col_idx.begin())];
}

CsrMatrix CsrMatrix::transposed() const {
    CsrMatrix t;
    t.n_rows = n_cols;
    t.n_cols = n_rows;
    t.row_ptr.assign(n_cols + 1, 0);
    t.col_idx.resize(nnz());
    t.values.resize(nnz());
    for (std::size_t k = 0; k < nnz(); ++k) ++t.row_ptr[col_idx[k] + 1];
    for (std::size_t j = 0; j < n_cols; ++j) t.row_ptr[j + 1] += t.row_ptr[j];
    std::vector<std::size_t> next(t.row_ptr.begin(), t.row_ptr.end() - 1);
    for (std::size_t i = 0; i < n_rows; ++i) {
        for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
            std::size_t pos = next[col_idx[k]]++;
            t.col_idx[pos] = i;
            t.values[pos] = values[k];
        }
    }
    return t;
}

bool CsrMatrix::is_symmetric(double tol) const {
    if (n_rows != n_cols) return false;
    CsrMatrix t = transposed();
    if (t.row_ptr != row_ptr || t.col_idx != col_idx) return false;
    for (std::size_t k = 0; k < nnz(); ++k) {
        if (std::abs(t.values[k] - values[k]) > tol) return false;
    }
    return true;
}

CsrMatrix csr_from_triplets(const std::vector<Triplet>& entries,
                            std::size_t n_rows, std::size_t n_cols) {
    for (const auto& e : entries) {
        if (e.row >= n_rows || e.col >= n_cols)
            throw StructuralError("csr_from_triplets: index out of range");
    }
    std::vector<Triplet> sorted = entries;
    std::stable_sort(sorted.begin(), sorted.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    CsrMatrix m;
    m.n_rows = n_rows;
    m.n_cols = n_cols;
    m.row_ptr.assign(n_rows + 1, 0);
    for (std::size_t k = 0; k < sorted.size();) {
        std::size_t r = sorted[k].row, c = sorted[k].col;
        double v = 0.0;
        while (k < sorted.size() && sorted[k].row == r && sorted[k].col == c) {
            v += sorted[k].value;
            ++k;
        }
        m.col_idx.push_back(c);
        m.values.push_back(v);
        ++m.row_ptr[r + 1];
    }
    for (std::size_t i = 0; i < n_rows; ++i) m.row_ptr[i + 1] += m.row_ptr[i];
    return m;
}

CsrMatrix csr_identity(std::size_t n) {
    CsrMatrix m;
    m.n_rows = m.n_cols = n;
    m.row_ptr.resize(n + 1);
    m.col_idx.resize(n);
    m.values.assign(n, 1.0);
    for (std::size_t i = 0; i <= n; ++i) m.row_ptr[i] = i;
    for (std::size_t i = 0; i < n; ++i) m.col_idx[i] = i;
    return m;
}

std::vector<double> spmv(const CsrMatrix& a, const std::vector<double>& x) {
    if (x.size() != a.n_cols) throw StructuralError("spmv: dimension mismatch");
    std::vector<double> y(a.n_rows, 0.0);
    for (std::size_t i = 0; i < a.n_rows; ++i) {
        double acc = 0.0;
        for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k)
            acc += a.values[k] * x[a.col_idx[k]];
        y[i] = acc;
    }
    return y;
}

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double rel_residual(const CsrMatrix& a, const std::vector<double>& x,
                    const std::vector<double>& b) {
    if (b.size() != a.n_rows) throw StructuralError("rel_residual: dimension mismatch");
    double nb = norm2(b);
    if (nb == 0.0) throw DomainError("rel_residual: ||b|| is zero");
    std::vector<double> ax = spmv(a, x);
    double s = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        double d = b[i] - ax[i];
        s += d * d;
    }
    return std::sqrt(s) / nb;
}

SolveResult cg_solve(const CsrMatrix& a, const std::vector<double>& b,
                     double tol, std::size_t max_iter) {
    if (a.n_rows != a.n_cols) throw StructuralError("cg_solve: matrix must be square");
    if (b.size() != a.n_rows) throw StructuralError("cg_solve: dimension mismatch");
    const std::size_t n = a.n_rows;
    if (max_iter == 0) max_iter = 10 * n + 100;

    SolveResult res;
    res.x.assign(n, 0.0);
    double nb = norm2(b);
    if (nb == 0.0) {
        res.converged = true;
        return res;
    }
    std::vector<double> r = b;  // r = b - A*0
    std::vector<double> p = r;
    double rr = dot(r, r);
    res.final_rel_residual = std::sqrt(rr) / nb;
    if (res.final_rel_residual <= tol) {
        res.converged = true;
        return res;
    }
    for (std::size_t it = 0; it < max_iter; ++it) {
        std::vector<double> ap = spmv(a, p);
        double pap = dot(p, ap);
        if (!std::isfinite(pap) || pap == 0.0)
            throw NumericalError("cg_solve: non-finite or zero curvature encountered");
        double alpha = rr / pap;
        for (std::size_t i = 0; i < n; ++i) {
            res.x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        double rr_new = dot(r, r);
        if (!std::isfinite(rr_new)) throw NumericalError("cg_solve: non-finite residual");
        res.iterations = it + 1;
        res.final_rel_residual = std::sqrt(rr_new) / nb;
        if (res.final_rel_residual <= tol) {
            res.converged = true;
            return res;
        }
        double beta = rr_new / rr;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
        rr = rr_new;
    }
    // use the true residual for the reported value on non-convergence
    res.final_rel_residual = rel_residual(a, res.x, b);
    res.converged = res.final_rel_residual <= tol;
    return res;
}

namespace {

std::string lowercase(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace

CsrMatrix mm_read(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw ParseError("mm_read: empty stream (line 1)");
    ++lineno;
    std::istringstream hdr(line);
    std::string banner, object, format, field, symmetry;
    hdr >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket" || lowercase(object) != "matrix" ||
        lowercase(format) != "coordinate" || lowercase(field) != "real")
        throw ParseError("mm_read: unsupported header at line 1: " + line);
    symmetry = lowercase(symmetry);
    bool symmetric = symmetry == "symmetric";
    if (!symmetric && symmetry != "general")
        throw ParseError("mm_read: unsupported symmetry '" + symmetry + "' at line 1");

    // skip comments
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line[0] != '%') break;
    }
    std::istringstream sz(line);
    long long nr = -1, nc = -1, nnz = -1;
    if (!(sz >> nr >> nc >> nnz) || nr < 0 || nc < 0 || nnz < 0)
        throw ParseError("mm_read: bad size line at line " + std::to_string(lineno));

    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(symmetric ? 2 * nnz : nnz));
    for (long long k = 0; k < nnz; ++k) {
        if (!std::getline(in, line))
            throw ParseError("mm_read: unexpected end of stream at line " +
                             std::to_string(lineno + 1));
        ++lineno;
        std::istringstream es(line);
        long long i = 0, j = 0;
        double v = 0.0;
        if (!(es >> i >> j >> v) || i < 1 || j < 1 || i > nr || j > nc)
            throw ParseError("mm_read: bad entry at line " + std::to_string(lineno));
        std::size_t r = static_cast<std::size_t>(i - 1);
        std::size_t c = static_cast<std::size_t>(j - 1);
        trips.push_back({r, c, v});
        if (symmetric && r != c) trips.push_back({c, r, v});
    }
    return csr_from_triplets(trips, static_cast<std::size_t>(nr), static_cast<std::size_t>(nc));
}

void mm_write(const CsrMatrix& a, std::ostream& out) {
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << a.n_rows << ' ' << a.n_cols << ' ' << a.nnz() << '\n';
    out << std::setprecision(17);
    for (std::size_t i = 0; i < a.n_rows; ++i) {
        for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
            out << i + 1 << ' ' << a.col_idx[k] + 1 << ' ' << a.values[k] << '\n';
        }
    }
}

CsrMatrix mm_read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("mm_read: cannot open " + path);
    return mm_read(in);
}

void mm_write_file(const CsrMatrix& a, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("mm_write: cannot open " + path);
    mm_write(a, out);
}

}  // namespace neurofem
