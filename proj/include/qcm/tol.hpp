#pragma once

// Numerical tolerances used throughout. Frobenius-relative unless stated.
namespace qcm::tol {

inline constexpr double herm = 1e-9;        // hermiticity / PSD slack
inline constexpr double tp = 1e-9;          // trace-preservation, normalization
inline constexpr double num = 1e-7;         // derived quantities (commutators, residuals)
inline constexpr double eig = 1e-10;        // eigenvalues below this count as zero
inline constexpr double alg = 1e-8;         // rank / closure decisions in algebra code
inline constexpr double prob = 1e-10;       // classical probability normalization
inline constexpr double cmi_classical = 1e-9;  // bits
inline constexpr double cmi_quantum = 1e-7;    // bits
inline constexpr double rank = 1e-8;        // rank-1 slice test (s2 <= rank * s1)
inline constexpr double sig = 1e-8;         // signalling test in discovery
inline constexpr double dilate = 1e-7;      // circuit-dilation round trip

inline constexpr unsigned long default_seed = 0x5EED;

}  // namespace qcm::tol
