//! Initial data: cell projection and the two experiment presets.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

use super::State;
use crate::error::Result;
use crate::mesh::{Field, Mesh};

/// Cell values of `u0` by the midpoint rule at cell centers.
pub fn project_initial(mesh: &Mesh, u0: impl Fn([f64; 3]) -> f64) -> Result<Field> {
    Field::new(mesh.cells().iter().map(|c| u0(c.center)).collect())
}

/// Per-cell data given directly.
pub fn project_cells(mesh: &Mesh, values: Vec<f64>) -> Result<Field> {
    let f = Field::new(values)?;
    mesh.check_field(&f)?;
    Ok(f)
}

/// Constant susceptible background plus sech-product pockets of infected.
#[derive(Clone, Debug, PartialEq)]
pub struct Example1 {
    pub background: f64,
    pub amplitude: f64,
    pub sharpness: f64,
    pub centers: Vec<[f64; 2]>,
}

impl Default for Example1 {
    fn default() -> Self {
        Self {
            background: 0.01,
            amplitude: 5000.0,
            sharpness: 2000.0,
            centers: vec![[0.25, 0.25], [0.125, 0.125], [0.125, 0.375], [0.375, 0.125], [0.375, 0.375]],
        }
    }
}

fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

impl Example1 {
    pub fn infected(&self, x: [f64; 3]) -> f64 {
        let b = self.sharpness;
        self.amplitude * self.centers.iter().map(|c| sech(b * (x[0] - c[0])) * sech(b * (x[1] - c[1]))).sum::<f64>()
    }
}

pub fn example1_initial(mesh: &Mesh, data: &Example1) -> Result<State> {
    State::new(
        project_initial(mesh, |_| data.background)?,
        project_initial(mesh, |x| data.infected(x))?,
        Field::zeros(mesh.num_cells()),
    )
}

/// Maps a 64-bit word to `[0, 1)` using its top 53 bits.
#[inline]
pub fn unit_uniform(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// `u_i = center_i + amplitude_i * omega` with `omega` uniform on `[0, 1)`.
///
/// The draws come from one SplitMix64 stream seeded with `seed`: all cells of
/// species 1 in storage order, then species 2, then species 3.
pub fn example2_random_initial(mesh: &Mesh, seed: u64, center: [f64; 3], amplitude: [f64; 3]) -> Result<State> {
    let mut rng = SplitMix64::from_seed(seed.to_le_bytes());
    let n = mesh.num_cells();
    let mut fields = Vec::with_capacity(3);
    for i in 0..3 {
        let v: Vec<f64> = (0..n).map(|_| center[i] + amplitude[i] * unit_uniform(rng.next_u64())).collect();
        fields.push(Field::new(v)?);
    }
    let [u1, u2, u3]: [Field; 3] = fields.try_into().expect("three species");
    State::new(u1, u2, u3)
}
