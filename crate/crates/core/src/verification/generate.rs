//! Random test instances for the verification suites.
//!
//! All values are binary64 numbers, and grid values use power-of-two
//! denominators, so a float instance and its exact rational image describe
//! the same reals. Grid instances produce exact boundary ties
//! `|x_i - x_j| = epsilon`.

use rand::Rng;

use crate::montecarlo::uniform01;

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    /// Sorted ascending.
    pub opinions: Vec<f64>,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy)]
pub enum Shape {
    Uniform,
    Grid,
    Clustered,
    Blocks,
}

const SHAPES: [Shape; 4] = [Shape::Uniform, Shape::Grid, Shape::Clustered, Shape::Blocks];

/// Epsilon in `(0, 1]`, drawn uniformly or from the instance grid.
pub fn instance<R: Rng>(rng: &mut R, max_n: usize) -> Instance {
    let n = rng.random_range(1..=max_n);
    let shape = SHAPES[rng.random_range(0..SHAPES.len())];
    instance_of_shape(rng, n, shape)
}

pub fn instance_of_shape<R: Rng>(rng: &mut R, n: usize, shape: Shape) -> Instance {
    let mut opinions: Vec<f64>;
    let epsilon;
    match shape {
        Shape::Uniform => {
            opinions = (0..n).map(|_| uniform01(rng)).collect();
            epsilon = 1.0 - uniform01(rng);
        }
        Shape::Grid => {
            let m = 1u32 << rng.random_range(2..=7);
            opinions = (0..n).map(|_| rng.random_range(0..=m) as f64 / m as f64).collect();
            epsilon = rng.random_range(1..=m) as f64 / m as f64;
        }
        Shape::Clustered => {
            let centers: Vec<f64> = (0..rng.random_range(1..=4)).map(|_| uniform01(rng)).collect();
            let width = 0.1 * uniform01(rng);
            opinions = (0..n)
                .map(|_| {
                    let c = centers[rng.random_range(0..centers.len())];
                    (c + width * (2.0 * uniform01(rng) - 1.0)).clamp(0.0, 1.0)
                })
                .collect();
            epsilon = (0.5 * (1.0 - uniform01(rng))).max(f64::MIN_POSITIVE);
        }
        Shape::Blocks => {
            // two groups separated by a gap close to epsilon
            epsilon = 0.05 + 0.45 * uniform01(rng);
            let gap = epsilon * (0.8 + 0.4 * uniform01(rng));
            let split = uniform01(rng) * (1.0 - gap);
            opinions = (0..n)
                .map(|_| {
                    if rng.next_u32() & 1 == 0 {
                        split * uniform01(rng)
                    } else {
                        (split + gap + (1.0 - split - gap) * uniform01(rng)).min(1.0)
                    }
                })
                .collect();
        }
    }
    opinions.sort_by(f64::total_cmp);
    Instance { opinions, epsilon }
}

/// Zero-sum float coefficients: draws in `[-1, 1)`, centred, with some
/// forced zeros.
pub fn coefficients<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut lambdas: Vec<f64> =
        (0..n).map(|_| if rng.random_range(0..5) == 0 { 0.0 } else { 2.0 * uniform01(rng) - 1.0 }).collect();
    let mean = lambdas.iter().sum::<f64>() / n as f64;
    for l in &mut lambdas {
        *l -= mean;
    }
    lambdas
}

pub fn points<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| 2.0 * uniform01(rng) - 1.0).collect()
}
