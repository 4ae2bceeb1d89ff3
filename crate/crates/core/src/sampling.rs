//! Reproducible sample points and random test polynomials.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::function::SmoothFunction;
use crate::quad::Domain;

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = u64::from(base);
    let mut inv = 1.0 / f64::from(base);
    let mut out = 0.0;
    while i > 0 {
        out += (i % b) as f64 * inv;
        i /= b;
        inv /= f64::from(base);
    }
    out
}

/// `count` Halton points in `domain`, shifted modulo 1 by a seeded random
/// vector (Cranley–Patterson rotation).
pub fn halton_points(domain: &Domain, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = domain.dimension();
    assert!(n <= PRIMES.len(), "halton sampling supports up to {} dimensions", PRIMES.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    (0..count)
        .map(|k| {
            (0..n)
                .map(|i| {
                    let u = (radical_inverse(k as u64 + 1, PRIMES[i]) + shift[i]).fract();
                    domain.lower[i] + (domain.upper[i] - domain.lower[i]) * u
                })
                .collect()
        })
        .collect()
}

/// Source text of a random polynomial in `x1..xn` with `terms` monomials of
/// total degree between 1 and `max_degree`, coefficients in `[−1, 1]` with
/// three decimals, plus a constant term.
pub fn random_polynomial_source<R: Rng>(rng: &mut R, n: usize, max_degree: u32, terms: usize) -> String {
    let mut out = format!("{:.3}", rng.gen_range(-1.0..=1.0));
    for _ in 0..terms {
        let degree = rng.gen_range(1..=max_degree);
        let mut powers = vec![0u32; n];
        for _ in 0..degree {
            powers[rng.gen_range(0..n)] += 1;
        }
        let c: f64 = rng.gen_range(-1.0..=1.0);
        let c = if c.abs() < 0.05 { 0.5 } else { c };
        let mut term = format!("{:.3}", c.abs());
        for (i, p) in powers.iter().enumerate() {
            match p {
                0 => {}
                1 => term.push_str(&format!("*x{}", i + 1)),
                p => term.push_str(&format!("*x{}^{p}", i + 1)),
            }
        }
        out.push_str(if c < 0.0 { " - " } else { " + " });
        out.push_str(&term);
    }
    out
}

/// `count` random polynomials, reproducible from `seed`.
pub fn random_polynomials(n: usize, count: usize, max_degree: u32, seed: u64) -> Vec<SmoothFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let terms = rng.gen_range(2..=5);
            let src = random_polynomial_source(&mut rng, n, max_degree, terms);
            SmoothFunction::parse(&src, n).expect("generated polynomial parses")
        })
        .collect()
}

/// Pairs of random polynomials.
pub fn random_pairs(n: usize, count: usize, max_degree: u32, seed: u64) -> Vec<(SmoothFunction, SmoothFunction)> {
    let polys = random_polynomials(n, 2 * count, max_degree, seed);
    polys.chunks(2).map(|c| (c[0].clone(), c[1].clone())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_is_reproducible_and_inside() {
        let d = Domain::new(vec![-1.0, 0.0, 2.0], vec![1.0, 3.0, 2.5]).unwrap();
        let a = halton_points(&d, 100, 7);
        assert_eq!(a, halton_points(&d, 100, 7));
        assert_ne!(a, halton_points(&d, 100, 8));
        assert!(a.iter().all(|x| d.contains(x)));
    }

    #[test]
    fn halton_covers_the_box() {
        let d = Domain::cube(2, 1.0).unwrap();
        let pts = halton_points(&d, 256, 1);
        let mut cells = [[0; 4]; 4];
        for p in &pts {
            let i = (((p[0] + 1.0) * 2.0) as usize).min(3);
            let j = (((p[1] + 1.0) * 2.0) as usize).min(3);
            cells[i][j] += 1;
        }
        assert!(cells.iter().flatten().all(|&c| (8..=24).contains(&c)));
    }

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
    }

    #[test]
    fn polynomials_parse_and_are_reproducible() {
        let a = random_polynomials(3, 20, 3, 42);
        let b = random_polynomials(3, 20, 3, 42);
        for (p, q) in a.iter().zip(&b) {
            assert_eq!(p.label(), q.label());
            assert!(p.value(&[0.1, 0.2, 0.3]).unwrap().is_finite());
        }
    }
}
