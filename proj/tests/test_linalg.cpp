#include <cmath>
#include <limits>

#include "chirl/linalg.hpp"
#include "doctest.h"

using namespace chirl;

TEST_SUITE_BEGIN("linalg");

TEST_CASE("matrix shape, fill and indexing") {
    Matrix m(2, 3, 0.5);
    CHECK(m.rows() == 2);
    CHECK(m.cols() == 3);
    CHECK(m(1, 2) == 0.5);
    m(0, 1) = -2.0;
    CHECK(m(0, 1) == -2.0);
    CHECK(m.data().size() == 6);

    numvec row = m.row(0);
    CHECK(row == numvec{0.5, -2.0, 0.5});

    Matrix empty;
    CHECK(empty.rows() == 0);
    CHECK(empty.cols() == 0);
    CHECK_THROWS_AS(Matrix(-1, 2), std::invalid_argument);
}

TEST_CASE("matrix equality is shape and content") {
    Matrix a(2, 2), b(2, 2), c(4, 1);
    a(0, 0) = b(0, 0) = 3.0;
    CHECK(a == b);
    b(1, 1) = 1e-300;
    CHECK_FALSE(a == b);
    CHECK_FALSE(a == c);  // same element count, different shape
}

TEST_CASE("row_ptr aliases the storage") {
    Matrix m(3, 2);
    m.row_ptr(2)[1] = 7.0;
    CHECK(m(2, 1) == 7.0);
}

TEST_CASE("logsumexp basics") {
    // two zeros: log(2)
    numvec two{0.0, 0.0};
    CHECK(logsumexp(two) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

    // single element is the identity
    numvec one{-3.25};
    CHECK(logsumexp(one) == -3.25);

    // shift invariance: lse(x + c) = lse(x) + c
    numvec x{0.3, -1.2, 2.7, 0.0};
    numvec shifted = x;
    for (double& v : shifted) v += 100.0;
    CHECK(logsumexp(shifted) == doctest::Approx(logsumexp(x) + 100.0).epsilon(1e-13));
}

TEST_CASE("logsumexp survives extreme inputs") {
    numvec big{1e308, 1e308};
    double r = logsumexp(big);
    CHECK(std::isfinite(r));
    CHECK(r == doctest::Approx(1e308 + std::log(2.0)));

    double ninf = -std::numeric_limits<double>::infinity();
    numvec allneg{ninf, ninf};
    CHECK(logsumexp(allneg) == ninf);

    // one dominant term
    numvec dom{0.0, -1000.0};
    CHECK(logsumexp(dom) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("norms and dot products") {
    numvec v{3.0, -4.0};
    CHECK(l1_norm(v) == 7.0);
    CHECK(l2_norm_sq(v) == 25.0);
    CHECK(dot(v, v) == 25.0);
    CHECK(dot(v, numvec{1.0, 1.0}) == -1.0);
    CHECK(l1_norm(numvec{}) == 0.0);

    numvec a{1.0, 2.0, 3.0}, b{1.0, 2.5, 1.0};
    CHECK(max_abs_diff(a, b) == 2.0);
    CHECK(max_abs_diff(a, a) == 0.0);
}

TEST_CASE("all_finite flags nan and inf") {
    CHECK(all_finite(numvec{0.0, -1.5, 1e300}));
    CHECK_FALSE(all_finite(numvec{0.0, std::nan("")}));
    CHECK_FALSE(all_finite(numvec{std::numeric_limits<double>::infinity()}));
    CHECK(all_finite(numvec{}));
}

TEST_SUITE_END();
