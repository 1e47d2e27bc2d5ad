//! Exact and extended-precision arithmetic substrate: prime fields, big
//! rationals, arbitrary-precision binary floats, dense polynomials,
//! truncated bivariate polynomials, Chinese remaindering and rational /
//! polynomial-fraction reconstruction.

pub mod crt;
pub mod decimal;
pub mod error;
pub mod field;
pub mod float;
pub mod poly;
pub mod primes;
pub mod rational;
pub mod ring;
pub mod ypoly;

pub use crt::{crt_combine, rational_reconstruct};
pub use error::ExactError;
pub use field::Fp;
pub use float::ExtFloat;
pub use poly::{fraction_reconstruct, interpolate, DensePoly};
pub use rational::reduce_with_den;
pub use primes::{is_prime_u64, prime_stream, PrimeStream};
pub use ring::{FieldRing, Ring};
pub use ypoly::{TruncBivarPoly, YPoly};

/// Arbitrary-precision rational, always reduced with positive denominator.
pub type Rat = num_rational::BigRational;
