//! 4x4 density matrices and propagators over the working basis.

use std::ops::Mul;

use nalgebra::Matrix4;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Mat4 = Matrix4<C64>;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const POSITIVITY_TOL: f64 = 1e-10;
pub const UNITARY_TOL: f64 = 1e-12;

pub(crate) const I: C64 = C64::new(0.0, 1.0);

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Largest absolute element of `m`.
pub fn max_abs(m: &Mat4) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

fn one_norm(m: &Mat4) -> f64 {
    (0..4)
        .map(|j| (0..4).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
///
/// The argument is scaled so its 1-norm is below 1/4; the series is then
/// summed until terms drop under machine precision.
pub fn expm(m: &Mat4) -> Mat4 {
    let norm = one_norm(m);
    let s = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as i32
    } else {
        0
    };
    let a = m.map(|z| z / 2f64.powi(s));
    let mut result = Mat4::identity();
    let mut term = Mat4::identity();
    for k in 1..=30 {
        term = term * a / c(k as f64);
        result += term;
        if max_abs(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        result = result * result;
    }
    result
}

/// exp(-i h t) for Hermitian `h`, through its eigendecomposition.
///
/// Stays unitary to rounding for any |h t|, unlike the series.
pub fn evolve_hermitian(h: &Mat4, t: f64) -> Mat4 {
    let eig = h.symmetric_eigen();
    let phases = Mat4::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, -l * t)));
    eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

/// Unitary 4x4 evolution operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagator4(Mat4);

impl Propagator4 {
    /// Wraps `m` after checking U U^dagger = 1 to [`UNITARY_TOL`] per element.
    pub fn new(m: Mat4) -> Result<Self> {
        let dev = unitarity_deviation(&m);
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self(m))
    }

    pub(crate) fn new_unchecked(m: Mat4) -> Self {
        Self(m)
    }

    pub fn identity() -> Self {
        Self(Mat4::identity())
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.0
    }

    pub fn unitarity_deviation(&self) -> f64 {
        unitarity_deviation(&self.0)
    }

    /// Conjugates the state: U rho U^dagger.
    pub fn apply(&self, rho: &DensityMatrix4) -> DensityMatrix4 {
        DensityMatrix4(self.0 * rho.0 * self.0.adjoint())
    }

    /// Image of basis vector `index` (0-based) as a column.
    pub fn column(&self, index: usize) -> [C64; 4] {
        let col = self.0.column(index);
        [col[0], col[1], col[2], col[3]]
    }
}

impl Mul for Propagator4 {
    type Output = Propagator4;
    /// `a * b` applies `b` first.
    fn mul(self, rhs: Propagator4) -> Propagator4 {
        Propagator4(self.0 * rhs.0)
    }
}

pub fn unitarity_deviation(m: &Mat4) -> f64 {
    max_abs(&(m * m.adjoint() - Mat4::identity()))
}

/// Hermitian, unit-trace, positive semidefinite 4x4 state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix4(pub(crate) Mat4);

impl DensityMatrix4 {
    /// Checks all state invariants.
    pub fn new(m: Mat4) -> Result<Self> {
        let rho = Self(m);
        rho.validate()?;
        Ok(rho)
    }

    /// Projector onto basis state `index` (0-based).
    pub fn pure(index: usize) -> Self {
        let mut m = Mat4::zeros();
        m[(index, index)] = c(1.0);
        Self(m)
    }

    /// Diagonal state with the given populations.
    pub fn from_populations(p: [f64; 4]) -> Result<Self> {
        Self::new(Mat4::from_diagonal(&nalgebra::Vector4::from(p.map(c))))
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn populations(&self) -> [f64; 4] {
        [0, 1, 2, 3].map(|i| self.0[(i, i)].re)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// Probability of |0>e.
    pub fn p0_electron(&self) -> f64 {
        let p = self.populations();
        p[0] + p[1]
    }

    /// P(m_I = +1) - P(m_I = 0).
    pub fn memory_polarization(&self) -> f64 {
        let p = self.populations();
        (p[1] + p[3]) - (p[0] + p[2])
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        max_abs(&(self.0 - self.0.adjoint()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        // Hermitian part only, so the eigen solver sees a symmetric input.
        let h = (self.0 + self.0.adjoint()).map(|z| z * 0.5);
        h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite element".into()));
        }
        let h = self.hermiticity_deviation();
        if h > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {h:.3e})")));
        }
        let t = self.trace();
        if (t - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {t} != 1")));
        }
        let e = self.min_eigenvalue();
        if e < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {e:.3e}")));
        }
        Ok(())
    }
}
