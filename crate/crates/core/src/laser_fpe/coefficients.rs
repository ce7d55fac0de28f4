use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::params::LaserParams;
use crate::error::{Error, Result};

/// Eigenvalues down to this are treated as zero.
const PSD_TOLERANCE: f64 = -1e-12;

/// Drift coefficient and diffusion components at one phase-space point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftDiffusion {
    /// Q_u: the drift field is −u·Q_u.
    pub q_u: Complex64,
    pub d_uu: Complex64,
    pub d_uustar: f64,
}

/// Anything that supplies FPE coefficients in the rescaled variable u.
pub trait WignerDynamics {
    fn coefficients(&self, u: Complex64) -> DriftDiffusion;
}

/// Q_u(u) of the Haake–Lewenstein equation.
pub fn drift_at(u: Complex64, p: &LaserParams) -> Complex64 {
    let LaserParams {
        cooperation: c,
        sigma0: s,
        gamma,
        f,
        n_s,
        ..
    } = *p;
    let n = p.atoms as f64;
    let x = u.norm_sqr();
    let a = 1.0 + x;
    let a3 = a * a * a;
    let a4 = a3 * a;
    let q = 1.0 - 2.0 * s * c / a
        + s * n / (2.0 * n_s * a3) * ((1.0 + f) * x - f)
        + s * s * c * f / (n_s * a4) * (n * (1.0 - x) - 2.0 * x)
        + c / (2.0 * n_s * a4) * (-2.0 * s * s * n * x + s * s * (1.0 - x) + (3.0 + x) * a * a);
    Complex64::new(0.5 * gamma * q, 0.0)
}

pub fn diffusion_at(u: Complex64, p: &LaserParams) -> DriftDiffusion {
    let LaserParams {
        cooperation: c,
        sigma0: s,
        gamma,
        f,
        n_s,
        ..
    } = *p;
    let x = u.norm_sqr();
    let a = 1.0 + x;
    let a3 = a * a * a;
    let k = s * s * (1.0 + 2.0 * f);
    let d_uu = -(c * gamma / (4.0 * n_s * a3)) * (k + a * a) * (u * u);
    let d_uustar = 0.25 * gamma * (1.0 / n_s + c / (n_s * a3) * (a * a * (2.0 + x) - x * k));
    DriftDiffusion {
        q_u: drift_at(u, p),
        d_uu,
        d_uustar,
    }
}

impl WignerDynamics for LaserParams {
    fn coefficients(&self, u: Complex64) -> DriftDiffusion {
        diffusion_at(u, self)
    }
}

/// Constant drift Q and diffusion D_s, i.e. ∂t W = [Q(∂u u + ∂u* u*) + 2D_s ∂²uu*] W.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantCoefficients {
    pub drift: f64,
    pub diffusion: f64,
}

impl WignerDynamics for ConstantCoefficients {
    fn coefficients(&self, _u: Complex64) -> DriftDiffusion {
        DriftDiffusion {
            q_u: Complex64::new(self.drift, 0.0),
            d_uu: Complex64::new(0.0, 0.0),
            d_uustar: self.diffusion,
        }
    }
}

/// Diffusion in u = x + iy: ∂t W ⊃ Σ ∂i∂j (D_ij W).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealDiffusion {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
    /// (larger, smaller)
    pub eigenvalues: (f64, f64),
}

impl RealDiffusion {
    /// Factor B with B·Bᵀ = D from the eigen-decomposition; diagonal
    /// matrices are factored along the axes.
    pub fn factor(&self) -> [[f64; 2]; 2] {
        let (l1, l2) = (
            self.eigenvalues.0.max(0.0).sqrt(),
            self.eigenvalues.1.max(0.0).sqrt(),
        );
        if self.xy == 0.0 {
            return [
                [self.xx.max(0.0).sqrt(), 0.0],
                [0.0, self.yy.max(0.0).sqrt()],
            ];
        }
        let theta = 0.5 * (2.0 * self.xy).atan2(self.xx - self.yy);
        let (sin, cos) = theta.sin_cos();
        [[cos * l1, -sin * l2], [sin * l1, cos * l2]]
    }
}

/// Maps the complex diffusion (D_uu, D_uu*) to the real 2×2 matrix.
///
/// D_xx = ½(D_uu* + Re D_uu), D_yy = ½(D_uu* − Re D_uu), D_xy = ½ Im D_uu,
/// with eigenvalues ½(D_uu* ± |D_uu|).
pub fn real_diffusion_matrix(dd: &DriftDiffusion) -> Result<RealDiffusion> {
    let xx = 0.5 * (dd.d_uustar + dd.d_uu.re);
    let yy = 0.5 * (dd.d_uustar - dd.d_uu.re);
    let xy = 0.5 * dd.d_uu.im;
    let half_tr = 0.5 * (xx + yy);
    let disc = (0.25 * (xx - yy) * (xx - yy) + xy * xy).sqrt();
    let eigenvalues = (half_tr + disc, half_tr - disc);
    if eigenvalues.1 < PSD_TOLERANCE {
        return Err(Error::NonDiffusiveRegion {
            u: Complex64::new(f64::NAN, f64::NAN),
            eigenvalues,
            trajectory: None,
            time: None,
        });
    }
    Ok(RealDiffusion {
        xx,
        xy,
        yy,
        eigenvalues,
    })
}
