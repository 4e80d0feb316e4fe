#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "sparse.hpp"

using namespace neurofem;

namespace {

// dense Gaussian elimination with partial pivoting, used as the CG oracle
std::vector<double> dense_solve(std::vector<std::vector<double>> m, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(m[i][k]) > std::abs(m[piv][k])) piv = i;
        std::swap(m[k], m[piv]);
        std::swap(b[k], b[piv]);
        REQUIRE(m[k][k] != 0.0);
        for (std::size_t i = k + 1; i < n; ++i) {
            double f = m[i][k] / m[k][k];
            for (std::size_t j = k; j < n; ++j) m[i][j] -= f * m[k][j];
            b[i] -= f * b[k];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= m[i][j] * x[j];
        x[i] = s / m[i][i];
    }
    return x;
}

CsrMatrix random_spd(std::size_t n, std::mt19937& rng,
                     std::vector<std::vector<double>>* dense_out) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m[i][j] = u(rng);
    // M^T M + n I is SPD
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t k = 0; k < n; ++k) a[i][j] += m[k][i] * m[k][j];
            if (i == j) a[i][j] += static_cast<double>(n);
        }
    std::vector<Triplet> trips;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) trips.push_back({i, j, a[i][j]});
    if (dense_out) *dense_out = a;
    return csr_from_triplets(trips, n, n);
}

}  // namespace

TEST_CASE("csr_from_triplets sums duplicates and sorts columns") {
    CsrMatrix a = csr_from_triplets({{0, 1, 2.0}, {0, 0, 1.0}, {0, 1, 3.0}, {1, 0, -1.0}}, 2, 2);
    CHECK(a.nnz() == 3);
    CHECK(a.at(0, 0) == 1.0);
    CHECK(a.at(0, 1) == 5.0);
    CHECK(a.at(1, 0) == -1.0);
    CHECK(a.at(1, 1) == 0.0);
    CHECK_THROWS_AS(csr_from_triplets({{2, 0, 1.0}}, 2, 2), StructuralError);
}

TEST_CASE("transpose and symmetry checks") {
    CsrMatrix a = csr_from_triplets({{0, 1, 2.0}, {1, 0, 2.0}, {1, 1, 4.0}}, 2, 2);
    CHECK(a.is_symmetric());
    CsrMatrix b = csr_from_triplets({{0, 1, 2.0}}, 2, 2);
    CHECK_FALSE(b.is_symmetric());
    CsrMatrix bt = b.transposed();
    CHECK(bt.at(1, 0) == 2.0);
    CHECK(bt.at(0, 1) == 0.0);
}

TEST_CASE("spmv and rel_residual") {
    CsrMatrix a = csr_identity(3);
    std::vector<double> x = {1.0, 2.0, 3.0};
    CHECK(spmv(a, x) == x);
    CHECK(rel_residual(a, x, x) == 0.0);
    CHECK_THROWS_AS(spmv(a, {1.0}), StructuralError);
    CHECK_THROWS_AS(rel_residual(a, x, {0.0, 0.0, 0.0}), DomainError);
}

TEST_CASE("cg matches dense elimination on random SPD systems up to 200 unknowns") {
    std::mt19937 rng(7);
    for (std::size_t n : {3, 10, 50, 120, 200}) {
        std::vector<std::vector<double>> dense;
        CsrMatrix a = random_spd(n, rng, &dense);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<double> b(n);
        for (double& v : b) v = u(rng);
        auto cg = cg_solve(a, b, 1e-14, 10 * n);
        REQUIRE(cg.converged);
        auto ref = dense_solve(dense, b);
        double num = 0, den = 0;
        for (std::size_t i = 0; i < n; ++i) {
            num += (cg.x[i] - ref[i]) * (cg.x[i] - ref[i]);
            den += ref[i] * ref[i];
        }
        CHECK(std::sqrt(num / den) < 1e-8);
    }
}

TEST_CASE("cg rejects malformed inputs") {
    CsrMatrix a = csr_from_triplets({{0, 0, 1.0}, {0, 1, 1.0}}, 1, 2);
    CHECK_THROWS_AS(cg_solve(a, {1.0}), StructuralError);
    CsrMatrix i2 = csr_identity(2);
    CHECK_THROWS_AS(cg_solve(i2, {1.0}), StructuralError);
    // iteration cap reached without convergence is reported, not thrown
    std::mt19937 rng(3);
    std::vector<std::vector<double>> dense;
    CsrMatrix spd = random_spd(40, rng, &dense);
    auto res = cg_solve(spd, std::vector<double>(40, 1.0), 1e-14, 1);
    CHECK_FALSE(res.converged);
}

TEST_CASE("matrix market round-trip is exact") {
    std::mt19937 rng(11);
    CsrMatrix a = random_spd(17, rng, nullptr);
    std::stringstream ss;
    mm_write(a, ss);
    CsrMatrix back = mm_read(ss);
    REQUIRE(back.n_rows == a.n_rows);
    REQUIRE(back.nnz() == a.nnz());
    CHECK(back.row_ptr == a.row_ptr);
    CHECK(back.col_idx == a.col_idx);
    for (std::size_t k = 0; k < a.nnz(); ++k) CHECK(back.values[k] == a.values[k]);
}

TEST_CASE("matrix market symmetric storage expands") {
    std::stringstream ss;
    ss << "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 4.0\n2 1 -1.5\n";
    CsrMatrix a = mm_read(ss);
    CHECK(a.at(0, 1) == -1.5);
    CHECK(a.at(1, 0) == -1.5);
    CHECK(a.at(0, 0) == 4.0);
    CHECK(a.is_symmetric());
}

TEST_CASE("matrix market parse errors carry positions") {
    std::stringstream bad("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 0\n");
    CHECK_THROWS_AS(mm_read(bad), ParseError);
    std::stringstream trunc("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n");
    CHECK_THROWS_AS(mm_read(trunc), ParseError);
}
