//! Uniform-grid discrete calculus with homogeneous Neumann boundary
//! conditions, shared by the diffuse and sharp solvers.
//!
//! All operators use mirror (ghost-node) boundary treatment, which keeps
//! them second-order accurate and makes the five-point Laplacian symmetric
//! under the trapezoid inner product. The discrete integral used for mass
//! identities is therefore the trapezoid-weighted nodal sum.

mod helmholtz;

pub use helmholtz::{solve_helmholtz_neumann, HelmholtzSolver};

use crate::{Error, Result};

/// Uniform rectangular tensor grid. Nodes include the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Grid> {
        if nx < 8 || ny < 8 {
            return Err(Error::InvalidParam(format!(
                "grid must have at least 8 nodes per axis, got {nx}x{ny}"
            )));
        }
        if !(lx > 0.0) || !(ly > 0.0) {
            return Err(Error::InvalidParam(format!(
                "grid lengths must be positive, got {lx}x{ly}"
            )));
        }
        Ok(Grid { nx, ny, lx, ly })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    /// Node spacing along x: lx / (nx - 1).
    pub fn hx(&self) -> f64 {
        self.lx / (self.nx - 1) as f64
    }

    /// Node spacing along y: ly / (ny - 1).
    pub fn hy(&self) -> f64 {
        self.ly / (self.ny - 1) as f64
    }

    pub fn n_nodes(&self) -> usize {
        self.nx * self.ny
    }

    /// Flat index of node (i, j); x varies fastest.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.hx()
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.hy()
    }

    /// Distance from a point to the rectangle boundary (nonnegative inside).
    pub fn boundary_clearance(&self, x: f64, y: f64) -> f64 {
        x.min(self.lx - x).min(y).min(self.ly - y)
    }
}

/// One value per grid node. Carries its grid so operator mismatches can be
/// detected.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn constant(grid: &Grid, c: f64) -> ScalarField {
        ScalarField {
            grid: grid.clone(),
            values: vec![c; grid.n_nodes()],
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        let mut values = Vec::with_capacity(grid.n_nodes());
        for j in 0..grid.ny() {
            let y = grid.y(j);
            for i in 0..grid.nx() {
                values.push(f(grid.x(i), y));
            }
        }
        ScalarField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<ScalarField> {
        if values.len() != grid.n_nodes() {
            return Err(Error::InvalidParam(format!(
                "field has {} values for a {}x{} grid",
                values.len(),
                grid.nx(),
                grid.ny()
            )));
        }
        Ok(ScalarField {
            grid: grid.clone(),
            values,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.idx(i, j);
        self.values[k] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Trapezoid-weighted discrete integral over the rectangle. This is the
    /// inner product under which the mirror-ghost Laplacian is symmetric, so
    /// mass identities hold for it to solver tolerance.
    pub fn integral(&self) -> f64 {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let mut sum = 0.0;
        for j in 0..ny {
            let wy = if j == 0 || j == ny - 1 { 0.5 } else { 1.0 };
            let mut row = 0.0;
            for i in 0..nx {
                let wx = if i == 0 || i == nx - 1 { 0.5 } else { 1.0 };
                row += wx * self.values[self.grid.idx(i, j)];
            }
            sum += wy * row;
        }
        sum * self.grid.hx() * self.grid.hy()
    }

    /// Plain nodal sum times the cell area (used by the conservative flux
    /// divergence whose telescoping is exact under plain summation).
    pub fn nodal_sum_integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.hx() * self.grid.hy()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(
                self.grid.nx(),
                self.grid.ny(),
                other.grid.nx(),
                other.grid.ny(),
            ));
        }
        Ok(())
    }
}

/// Pair of component fields on one grid.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub x: ScalarField,
    pub y: ScalarField,
}

impl VectorField {
    pub fn new(x: ScalarField, y: ScalarField) -> Result<VectorField> {
        x.same_grid(&y)?;
        Ok(VectorField { x, y })
    }

    pub fn grid(&self) -> &Grid {
        self.x.grid()
    }
}

/// Mirror-indexed neighbor: reflects one step past the boundary back inside.
#[inline]
fn mirror(i: usize, n: usize, step: isize) -> usize {
    let k = i as isize + step;
    if k < 0 {
        (-k) as usize
    } else if k as usize >= n {
        2 * (n - 1) - k as usize
    } else {
        k as usize
    }
}

/// Five-point Laplacian with mirror ghost nodes enforcing df/dnu = 0.
pub fn laplacian_neumann(f: &ScalarField) -> ScalarField {
    let g = f.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let cx = 1.0 / (g.hx() * g.hx());
    let cy = 1.0 / (g.hy() * g.hy());
    let v = f.values();
    let mut out = vec![0.0; v.len()];
    for j in 0..ny {
        let jm = mirror(j, ny, -1);
        let jp = mirror(j, ny, 1);
        for i in 0..nx {
            let im = mirror(i, nx, -1);
            let ip = mirror(i, nx, 1);
            let c = v[g.idx(i, j)];
            out[g.idx(i, j)] = cx * (v[g.idx(im, j)] - 2.0 * c + v[g.idx(ip, j)])
                + cy * (v[g.idx(i, jm)] - 2.0 * c + v[g.idx(i, jp)]);
        }
    }
    ScalarField {
        grid: g.clone(),
        values: out,
    }
}

/// Centered gradient with mirror ghosts; the normal component vanishes
/// exactly on the boundary.
pub fn gradient_neumann(f: &ScalarField) -> VectorField {
    let g = f.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let cx = 1.0 / (2.0 * g.hx());
    let cy = 1.0 / (2.0 * g.hy());
    let v = f.values();
    let mut gx = vec![0.0; v.len()];
    let mut gy = vec![0.0; v.len()];
    for j in 0..ny {
        let jm = mirror(j, ny, -1);
        let jp = mirror(j, ny, 1);
        for i in 0..nx {
            let im = mirror(i, nx, -1);
            let ip = mirror(i, nx, 1);
            gx[g.idx(i, j)] = cx * (v[g.idx(ip, j)] - v[g.idx(im, j)]);
            gy[g.idx(i, j)] = cy * (v[g.idx(i, jp)] - v[g.idx(i, jm)]);
        }
    }
    VectorField {
        x: ScalarField {
            grid: g.clone(),
            values: gx,
        },
        y: ScalarField {
            grid: g.clone(),
            values: gy,
        },
    }
}

/// Divergence of a face-centered reconstruction of the node flux `F`.
///
/// Node components are averaged to faces and zero normal flux is imposed on
/// boundary faces, so the plain nodal sum of the output telescopes to zero.
pub fn divergence_flux(flux: &VectorField) -> ScalarField {
    let g = flux.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let fx = flux.x.values();
    let fy = flux.y.values();
    let ihx = 1.0 / g.hx();
    let ihy = 1.0 / g.hy();
    let mut out = vec![0.0; g.n_nodes()];
    for j in 0..ny {
        for i in 0..nx {
            let k = g.idx(i, j);
            let fe = if i + 1 < nx {
                0.5 * (fx[k] + fx[g.idx(i + 1, j)])
            } else {
                0.0
            };
            let fw = if i > 0 {
                0.5 * (fx[g.idx(i - 1, j)] + fx[k])
            } else {
                0.0
            };
            let fn_ = if j + 1 < ny {
                0.5 * (fy[k] + fy[g.idx(i, j + 1)])
            } else {
                0.0
            };
            let fs = if j > 0 {
                0.5 * (fy[g.idx(i, j - 1)] + fy[k])
            } else {
                0.0
            };
            out[k] = (fe - fw) * ihx + (fn_ - fs) * ihy;
        }
    }
    ScalarField {
        grid: g.clone(),
        values: out,
    }
}
