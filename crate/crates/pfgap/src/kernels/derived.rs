use super::scalar::ScalarKernel;
use crate::error::{domain, Result};
use crate::numerics_base::{pfaffian, AntisymMatrix};

/// The 2×2 matrix kernel
/// `[[S + K, −D₂K], [−D₁K, D₁D₂K]]` with the jump `S(x,y) = sgn(y − x)`, `S(x,x) = 0`.
#[derive(Clone, Debug)]
pub struct DerivedKernel {
    pub scalar: ScalarKernel,
}

pub fn derived(scalar: ScalarKernel) -> DerivedKernel {
    DerivedKernel { scalar }
}

impl DerivedKernel {
    /// The 2×2 block at (x, y), including the jump term.
    pub fn block(&self, x: f64, y: f64) -> [[f64; 2]; 2] {
        let k = &self.scalar;
        if x == y {
            return [[0.0, -k.d2(x, x)], [-k.d1(x, x), 0.0]];
        }
        let s = if y > x { 1.0 } else { -1.0 };
        [[s + k.k(x, y), -k.d2(x, y)], [-k.d1(x, y), k.d12(x, y)]]
    }

    /// n-point intensity pf(p𝐊(xᵢ, xⱼ)) of the p-thinned process.
    pub fn intensity(&self, p: f64, points: &[f64]) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return domain("thinning parameter must lie in [0, 1]");
        }
        for (i, a) in points.iter().enumerate() {
            if points[i + 1..].contains(a) {
                return domain("intensity needs distinct points");
            }
        }
        let n = points.len();
        if n == 0 {
            return Ok(1.0);
        }
        let mut m = AntisymMatrix::zeros(2 * n)?;
        for i in 0..n {
            let b = self.block(points[i], points[i]);
            m.set(2 * i, 2 * i + 1, p * b[0][1]);
            for j in i + 1..n {
                let b = self.block(points[i], points[j]);
                for a in 0..2 {
                    for c in 0..2 {
                        m.set(2 * i + a, 2 * j + c, p * b[a][c]);
                    }
                }
            }
        }
        pfaffian(&m)
    }
}
