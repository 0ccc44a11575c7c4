#pragma once

#include <complex>

namespace ghostfit {

// Error function of real argument. Odd, erf(x) + erfc(x) = 1.
// Relative accuracy <= 1e-12 for |x| <= 27. Throws DomainError on
// non-finite input.
double erf_real(double x);

// Complementary error function of real argument, strictly decreasing.
double erfc_real(double x);

// Faddeeva function w(z) = exp(-z^2) * erfc(-i z).
//
// Relative accuracy (complex norm) <= 1e-10 for |z| <= 100, verified
// against a committed arbitrary-precision table; the asymptotic
// continued-fraction regime used beyond that disk only improves with |z|
// and is covered by extra table rows. In the lower half plane the value
// grows like exp(|Im z|^2 - |Re z|^2); when that exceeds the double
// range a RangeError is thrown instead of returning infinity or NaN.
std::complex<double> faddeeva(std::complex<double> z);

// Complementary error function of complex argument,
// erfc(z) = exp(-z^2) * w(iz). Reduces to erfc_real on the real axis;
// erfc(conj z) = conj(erfc(z)). Throws RangeError when the true value
// overflows double precision.
std::complex<double> erfc_complex(std::complex<double> z);

}  // namespace ghostfit
