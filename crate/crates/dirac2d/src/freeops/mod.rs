//! Free Dirac kernels: 2×2 block algebra, the free resolvent boundary
//! values, the low-energy expansion kernels, μ₀ and the smooth cutoff χ.

pub(crate) mod kernels;

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use kernels::{
    dirac_resolvent, expansion_kernel, mu0, resolvent_kernel, resolvent_remainder, schrodinger_resolvent,
    spectral_jump, ExpansionTag,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x1: f64,
    pub x2: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x1: 0.0, x2: 0.0 };

    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn norm(self) -> f64 {
        self.x1.hypot(self.x2)
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }

    pub fn scale(self, s: f64) -> Point2 {
        Point2::new(s * self.x1, s * self.x2)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x1 - rhs.x1, self.x2 - rhs.x2)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x1 + rhs.x1, self.x2 + rhs.x2)
    }
}

/// Japanese bracket ⟨x⟩ = (1 + |x|²)^{1/2}.
pub fn bracket(p: Point2) -> f64 {
    (1.0 + p.x1 * p.x1 + p.x2 * p.x2).sqrt()
}

/// A 2×2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Block(pub [[Complex64; 2]; 2]);

impl Block {
    pub const ZERO: Block = Block([[ZERO, ZERO], [ZERO, ZERO]]);
    pub const IDENTITY: Block = Block([[ONE, ZERO], [ZERO, ONE]]);
    pub const BETA: Block = Block([[ONE, ZERO], [ZERO, Complex64::new(-1.0, 0.0)]]);
    pub const ALPHA1: Block = Block([[ZERO, ONE], [ONE, ZERO]]);
    pub const ALPHA2: Block = Block([[ZERO, Complex64::new(0.0, -1.0)], [I, ZERO]]);

    pub const fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Block([[a, b], [c, d]])
    }

    pub fn scalar(z: Complex64) -> Self {
        Block([[z, ZERO], [ZERO, z]])
    }

    pub fn diag(a: Complex64, d: Complex64) -> Self {
        Block([[a, ZERO], [ZERO, d]])
    }

    pub fn from_real(m: [[f64; 2]; 2]) -> Self {
        Block([
            [Complex64::new(m[0][0], 0.0), Complex64::new(m[0][1], 0.0)],
            [Complex64::new(m[1][0], 0.0), Complex64::new(m[1][1], 0.0)],
        ])
    }

    pub fn adjoint(&self) -> Block {
        let m = &self.0;
        Block([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn conj(&self) -> Block {
        let m = &self.0;
        Block([[m[0][0].conj(), m[0][1].conj()], [m[1][0].conj(), m[1][1].conj()]])
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Operator (spectral) norm, from the closed form for 2×2 singular values.
    pub fn norm(&self) -> f64 {
        let f2: f64 = self.0.iter().flatten().map(|z| z.norm_sqr()).sum();
        let d = self.det().norm();
        let disc = (f2 * f2 - 4.0 * d * d).max(0.0).sqrt();
        ((f2 + disc) / 2.0).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (*self - self.adjoint()).max_abs() <= tol
    }

    pub fn scale(&self, z: Complex64) -> Block {
        let m = &self.0;
        Block([[m[0][0] * z, m[0][1] * z], [m[1][0] * z, m[1][1] * z]])
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }
}

/// α·ξ = [[0, ξ₁ − iξ₂], [ξ₁ + iξ₂, 0]].
pub fn alpha_dot(xi1: f64, xi2: f64) -> Block {
    Block([[ZERO, Complex64::new(xi1, -xi2)], [Complex64::new(xi1, xi2), ZERO]])
}

/// True iff the anticommutators of {β, α₁, α₂} equal 2δ_{jk}·I exactly.
pub fn dirac_algebra_check() -> bool {
    let mats = [Block::BETA, Block::ALPHA1, Block::ALPHA2];
    for (j, a) in mats.iter().enumerate() {
        for (k, b) in mats.iter().enumerate() {
            let anti = *a * *b + *b * *a;
            let expected = if j == k { Block::IDENTITY * 2.0 } else { Block::ZERO };
            if anti != expected {
                return false;
            }
        }
    }
    true
}

impl Index<(usize, usize)> for Block {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for Block {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.0[i][j]
    }
}

impl Add for Block {
    type Output = Block;
    fn add(mut self, rhs: Block) -> Block {
        self += rhs;
        self
    }
}

impl AddAssign for Block {
    fn add_assign(&mut self, rhs: Block) {
        for i in 0..2 {
            for j in 0..2 {
                self.0[i][j] += rhs.0[i][j];
            }
        }
    }
}

impl Sub for Block {
    type Output = Block;
    fn sub(mut self, rhs: Block) -> Block {
        self -= rhs;
        self
    }
}

impl SubAssign for Block {
    fn sub_assign(&mut self, rhs: Block) {
        for i in 0..2 {
            for j in 0..2 {
                self.0[i][j] -= rhs.0[i][j];
            }
        }
    }
}

impl Neg for Block {
    type Output = Block;
    fn neg(self) -> Block {
        self * -1.0
    }
}

impl Mul for Block {
    type Output = Block;
    fn mul(self, rhs: Block) -> Block {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = Block::ZERO;
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        out
    }
}

impl Mul<Complex64> for Block {
    type Output = Block;
    fn mul(self, z: Complex64) -> Block {
        self.scale(z)
    }
}

impl Mul<f64> for Block {
    type Output = Block;
    fn mul(mut self, s: f64) -> Block {
        self *= s;
        self
    }
}

impl MulAssign<f64> for Block {
    fn mul_assign(&mut self, s: f64) {
        for z in self.0.iter_mut().flatten() {
            *z *= s;
        }
    }
}

/// Smooth even cutoff: 1 on |λ| ≤ λ₁, 0 on |λ| ≥ 2λ₁.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CutoffSpec {
    pub lambda1: f64,
}

impl Default for CutoffSpec {
    fn default() -> Self {
        Self { lambda1: 0.1 }
    }
}

impl CutoffSpec {
    pub fn new(lambda1: f64) -> crate::Result<Self> {
        if !(lambda1.is_finite() && lambda1 > 0.0) {
            return Err(crate::Error::Validation(format!("cutoff lambda1 must be > 0, got {lambda1}")));
        }
        Ok(Self { lambda1 })
    }

    pub fn chi(&self, lambda: f64) -> f64 {
        smooth_cutoff(lambda, *self)
    }

    pub fn support(&self) -> f64 {
        2.0 * self.lambda1
    }
}

fn glue(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

/// χ(λ) built from exp(−1/s) glue on [λ₁, 2λ₁]. With s the position in
/// the transition, χ = f(1−s)/(f(1−s) + f(s)), antisymmetric about s = 1/2.
pub fn smooth_cutoff(lambda: f64, spec: CutoffSpec) -> f64 {
    let s = (lambda.abs() - spec.lambda1) / spec.lambda1;
    if s <= 0.0 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        let a = glue(1.0 - s);
        a / (a + glue(s))
    }
}
