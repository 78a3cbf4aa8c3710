//! Field interpolation on the uniform grid.
//!
//! Both interpolants use mirror indexing past the boundary, matching the
//! Neumann ghost-node convention of the discrete operators.

use crate::numerics::{Grid, ScalarField};

#[inline]
fn mirror_i(k: isize, n: usize) -> usize {
    let m = (n - 1) as isize;
    let mut k = k;
    if k < 0 {
        k = -k;
    }
    if k > m {
        k = 2 * m - k;
    }
    k.clamp(0, m) as usize
}

/// Bilinear interpolation of a scalar field at a physical point.
pub fn bilinear(field: &ScalarField, x: f64, y: f64) -> f64 {
    let g = field.grid();
    let sx = (x / g.hx()).clamp(0.0, (g.nx() - 1) as f64);
    let sy = (y / g.hy()).clamp(0.0, (g.ny() - 1) as f64);
    let i0 = (sx.floor() as usize).min(g.nx() - 2);
    let j0 = (sy.floor() as usize).min(g.ny() - 2);
    let tx = sx - i0 as f64;
    let ty = sy - j0 as f64;
    let v00 = field.at(i0, j0);
    let v10 = field.at(i0 + 1, j0);
    let v01 = field.at(i0, j0 + 1);
    let v11 = field.at(i0 + 1, j0 + 1);
    (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11)
}

#[inline]
fn catmull_rom_weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

#[inline]
fn catmull_rom_dweights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    [
        0.5 * (-3.0 * t2 + 4.0 * t - 1.0),
        0.5 * (9.0 * t2 - 10.0 * t),
        0.5 * (-9.0 * t2 + 8.0 * t + 1.0),
        0.5 * (3.0 * t2 - 2.0 * t),
    ]
}

/// C1 bicubic (Catmull-Rom tensor product) interpolant with gradient.
pub struct Bicubic<'a> {
    field: &'a ScalarField,
}

impl<'a> Bicubic<'a> {
    pub fn new(field: &'a ScalarField) -> Bicubic<'a> {
        Bicubic { field }
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }

    /// Value and gradient at a physical point (clamped to the rectangle).
    pub fn eval(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let g = self.field.grid();
        let (nx, ny) = (g.nx(), g.ny());
        let sx = (x / g.hx()).clamp(0.0, (nx - 1) as f64);
        let sy = (y / g.hy()).clamp(0.0, (ny - 1) as f64);
        let i0 = (sx.floor() as isize).min(nx as isize - 2);
        let j0 = (sy.floor() as isize).min(ny as isize - 2);
        let tx = sx - i0 as f64;
        let ty = sy - j0 as f64;

        let wx = catmull_rom_weights(tx);
        let dwx = catmull_rom_dweights(tx);
        let wy = catmull_rom_weights(ty);
        let dwy = catmull_rom_dweights(ty);

        let mut v = 0.0;
        let mut vx = 0.0;
        let mut vy = 0.0;
        for (b, (wyb, dwyb)) in wy.iter().zip(dwy.iter()).enumerate() {
            let j = mirror_i(j0 + b as isize - 1, ny);
            let mut row = 0.0;
            let mut drow = 0.0;
            for (a, (wxa, dwxa)) in wx.iter().zip(dwx.iter()).enumerate() {
                let i = mirror_i(i0 + a as isize - 1, nx);
                let p = self.field.at(i, j);
                row += wxa * p;
                drow += dwxa * p;
            }
            v += wyb * row;
            vx += wyb * drow;
            vy += dwyb * row;
        }
        (v, vx / g.hx(), vy / g.hy())
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.eval(x, y).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Grid;

    #[test]
    fn bilinear_reproduces_nodes_and_planes() {
        let g = Grid::new(9, 9, 1.0, 1.0).unwrap();
        let f = ScalarField::from_fn(&g, |x, y| 2.0 * x - 3.0 * y + 0.7);
        for j in 0..9 {
            for i in 0..9 {
                let v = bilinear(&f, g.x(i), g.y(j));
                assert!((v - f.at(i, j)).abs() < 1e-14);
            }
        }
        let v = bilinear(&f, 0.31, 0.47);
        assert!((v - (2.0 * 0.31 - 3.0 * 0.47 + 0.7)).abs() < 1e-14);
    }

    #[test]
    fn bicubic_is_third_order_accurate() {
        let probe = [(0.313, 0.521), (0.04, 0.97), (0.74, 0.26)];
        let exact = |x: f64, y: f64| (2.1 * x).sin() * (1.3 * y).cos();
        let mut errs = Vec::new();
        for &n in &[17usize, 33, 65] {
            let g = Grid::new(n, n, 1.0, 1.0).unwrap();
            let f = ScalarField::from_fn(&g, exact);
            let interp = Bicubic::new(&f);
            let mut err: f64 = 0.0;
            for &(x, y) in &probe {
                err = err.max((interp.value(x, y) - exact(x, y)).abs());
            }
            errs.push(err);
        }
        for w in errs.windows(2) {
            let slope = (w[0] / w[1]).log2();
            assert!(slope > 2.5, "bicubic slope {slope}, errs {errs:?}");
        }
    }

    #[test]
    fn bicubic_gradient_matches_analytic() {
        let g = Grid::new(65, 65, 1.0, 1.0).unwrap();
        let f = ScalarField::from_fn(&g, |x, y| (2.0 * x).sin() * y + x * x);
        let interp = Bicubic::new(&f);
        let (_, vx, vy) = interp.eval(0.4, 0.6);
        let ex = 2.0 * (0.8f64).cos() * 0.6 + 0.8;
        let ey = (0.8f64).sin();
        assert!((vx - ex).abs() < 1e-3, "{vx} vs {ex}");
        assert!((vy - ey).abs() < 1e-3, "{vy} vs {ey}");
    }
}
