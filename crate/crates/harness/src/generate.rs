//! Seeded random instances for the verification suites.

use std::str::FromStr;

use orlicz_lorentz::funcspace::Monotonicity;
use orlicz_lorentz::{Grid2DKernel64, StepFunction64};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const MAX_SLABS: usize = 1000;
pub const MAX_GRID: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenKind {
    Step,
    DecreasingStep,
    DecreasingKernelProfile,
    GridKernel,
}

impl FromStr for GenKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| HarnessError::arg(format!("unknown generator kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeParams {
    pub slabs: usize,
    /// Cells per axis of a grid kernel.
    pub grid: usize,
    /// Grid kernels nonincreasing in both variables.
    pub monotone: bool,
}

impl Default for SizeParams {
    fn default() -> Self {
        Self { slabs: 8, grid: 64, monotone: false }
    }
}

impl SizeParams {
    pub fn validate(&self) -> Result<()> {
        if self.slabs == 0 || self.slabs > MAX_SLABS {
            return Err(HarnessError::arg(format!("slab count must be in 1..={MAX_SLABS}, got {}", self.slabs)));
        }
        if self.grid == 0 || self.grid > MAX_GRID {
            return Err(HarnessError::arg(format!("grid size must be in 1..={MAX_GRID}, got {}", self.grid)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generated {
    Step(StepFunction64),
    Kernel(Grid2DKernel64),
}

/// RNG for trial `trial` of a run seeded with `seed`: one ChaCha stream per trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

pub fn generate(kind: GenKind, seed: u64, size: &SizeParams) -> Result<Generated> {
    generate_with(kind, &mut trial_rng(seed, 0), size)
}

pub fn generate_with(kind: GenKind, rng: &mut ChaCha8Rng, size: &SizeParams) -> Result<Generated> {
    size.validate()?;
    Ok(match kind {
        GenKind::Step => Generated::Step(random_step(rng, size.slabs)?),
        GenKind::DecreasingStep => Generated::Step(random_decreasing_step(rng, size.slabs)?),
        GenKind::DecreasingKernelProfile => Generated::Step(random_kernel_profile(rng, size.slabs)?),
        GenKind::GridKernel => Generated::Kernel(random_grid_kernel(rng, size.grid, size.monotone)?),
    })
}

fn check_slabs(n: usize) -> Result<()> {
    SizeParams { slabs: n, ..Default::default() }.validate()
}

fn lengths(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.05..1.0)).collect()
}

/// Values in `[0, 4)`, about one slab in six set to zero.
pub fn random_step(rng: &mut ChaCha8Rng, slabs: usize) -> Result<StepFunction64> {
    check_slabs(slabs)?;
    let len = lengths(rng, slabs);
    let values = (0..slabs)
        .map(|_| if rng.random_bool(1.0 / 6.0) { 0.0 } else { rng.random_range(0.0..4.0) })
        .collect();
    Ok(StepFunction64::from_slabs(&len, values)?)
}

fn suffix_sums(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    for i in (0..n.saturating_sub(1)).rev() {
        v[i] += v[i + 1];
    }
    v
}

pub fn random_decreasing_step(rng: &mut ChaCha8Rng, slabs: usize) -> Result<StepFunction64> {
    check_slabs(slabs)?;
    let len = lengths(rng, slabs);
    Ok(StepFunction64::from_slabs(&len, suffix_sums(rng, slabs))?)
}

/// Nonincreasing step profile whose slab lengths spread over four decades.
pub fn random_kernel_profile(rng: &mut ChaCha8Rng, slabs: usize) -> Result<StepFunction64> {
    check_slabs(slabs)?;
    let len: Vec<f64> = (0..slabs).map(|_| 10f64.powf(rng.random_range(-2.0..2.0))).collect();
    Ok(StepFunction64::from_slabs(&len, suffix_sums(rng, slabs))?)
}

fn breakpoints(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut b = vec![0.0];
    for l in lengths(rng, n) {
        b.push(b[b.len() - 1] + l);
    }
    b
}

/// `n × n` cells of random values on an equally spaced grid per axis, with
/// cell widths in `[0.05, 1)`. Rearranged sections of such a kernel keep
/// their breakpoints on the same lattice, so iterated rearrangement stays
/// `n × n`.
pub fn random_lattice_kernel(rng: &mut ChaCha8Rng, n: usize) -> Result<Grid2DKernel64> {
    SizeParams { grid: n, ..Default::default() }.validate()?;
    let axis = |rng: &mut ChaCha8Rng| {
        let h = rng.random_range(0.05..1.0);
        (0..=n).map(|i| i as f64 * h).collect::<Vec<f64>>()
    };
    let xb = axis(rng);
    let yb = axis(rng);
    let cells = (0..n)
        .map(|_| (0..n).map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..1.0) }).collect())
        .collect();
    Ok(Grid2DKernel64::new(xb, yb, cells)?)
}

/// `n × n` cells on random breakpoints. With `monotone`, values are
/// two-dimensional suffix sums and the kernel is flagged nonincreasing in
/// both variables.
pub fn random_grid_kernel(rng: &mut ChaCha8Rng, n: usize, monotone: bool) -> Result<Grid2DKernel64> {
    SizeParams { grid: n, ..Default::default() }.validate()?;
    let xb = breakpoints(rng, n);
    let yb = breakpoints(rng, n);
    let mut cells: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| if !monotone && rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..1.0) })
                .collect()
        })
        .collect();
    if !monotone {
        return Ok(Grid2DKernel64::new(xb, yb, cells)?);
    }
    for i in (0..n).rev() {
        for j in (0..n).rev() {
            let below = if i + 1 < n { cells[i + 1][j] } else { 0.0 };
            let right = if j + 1 < n { cells[i][j + 1] } else { 0.0 };
            let diag = if i + 1 < n && j + 1 < n { cells[i + 1][j + 1] } else { 0.0 };
            cells[i][j] += below + right - diag;
        }
    }
    Ok(Grid2DKernel64::new(xb, yb, cells)?.with_flags(Monotonicity::Decreasing, Monotonicity::Decreasing)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decreasing_step_is_sorted() {
        let size = SizeParams { slabs: 4, ..Default::default() };
        let Generated::Step(f) = generate(GenKind::DecreasingStep, 7, &size).unwrap() else {
            panic!("expected a step function");
        };
        assert_eq!(f.num_slabs(), 4);
        assert!(f.is_nonincreasing());
    }

    #[test]
    fn reproducible_from_seed() {
        let size = SizeParams::default();
        let a = generate(GenKind::Step, 7, &size).unwrap();
        let b = generate(GenKind::Step, 7, &size).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate(GenKind::Step, 8, &size).unwrap());
        let mut r0 = trial_rng(7, 0);
        let mut r1 = trial_rng(7, 1);
        assert_ne!(random_step(&mut r0, 5).unwrap(), random_step(&mut r1, 5).unwrap());
    }

    #[test]
    fn monotone_grid_kernel() {
        let size = SizeParams { grid: 16, monotone: true, ..Default::default() };
        let Generated::Kernel(k) = generate(GenKind::GridKernel, 3, &size).unwrap() else {
            panic!("expected a kernel");
        };
        assert!(k.is_nonincreasing_in_x() && k.is_nonincreasing_in_y());
        assert_eq!((k.nx(), k.ny()), (16, 16));
        assert_eq!(k.monotone_flags(), (Monotonicity::Decreasing, Monotonicity::Decreasing));
    }

    #[test]
    fn lattice_kernel_rearranges_in_place() {
        let k = random_lattice_kernel(&mut trial_rng(4, 0), 32).unwrap();
        let l = orlicz_lorentz::rearrange::iterated_rearrangement(&k);
        assert!(l.nx() <= 32 && l.ny() <= 32, "{} x {}", l.nx(), l.ny());
    }

    #[test]
    fn size_bounds() {
        for size in [
            SizeParams { slabs: 1001, ..Default::default() },
            SizeParams { slabs: 0, ..Default::default() },
            SizeParams { grid: 513, ..Default::default() },
        ] {
            assert!(matches!(generate(GenKind::Step, 1, &size), Err(HarnessError::Argument(_))));
        }
        assert_eq!("grid_kernel".parse::<GenKind>().unwrap(), GenKind::GridKernel);
        assert!("nope".parse::<GenKind>().is_err());
    }
}
