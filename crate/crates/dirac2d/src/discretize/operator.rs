use std::io::{Read, Write};
use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64;

use super::Grid2;
use crate::error::{Error, Result};
use crate::freeops::{bracket, Block, Point2};

/// Discretized integral operator on L²(ℝ²; ℂ²) over a grid.
///
/// Stored in the symmetric-weighted form A_ij = √wᵢ K(xᵢ, xⱼ) √wⱼ (2×2 blocks
/// at rows 2i.., cols 2j..), so operator composition is the plain matrix
/// product and self-adjoint operators are Hermitian matrices. A field f acts
/// through its coefficients √wⱼ f(xⱼ).
#[derive(Debug, Clone)]
pub struct BlockOperator {
    grid: Arc<Grid2>,
    mat: Mat<Complex64>,
    self_adjoint: bool,
}

impl BlockOperator {
    pub fn from_matrix(grid: Arc<Grid2>, mat: Mat<Complex64>, self_adjoint: bool) -> Result<Self> {
        let dim = 2 * grid.len();
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(Error::Validation(format!(
                "matrix is {}x{}, grid needs {dim}x{dim}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(Self { grid, mat, self_adjoint })
    }

    pub fn identity(grid: &Arc<Grid2>) -> Self {
        let dim = 2 * grid.len();
        Self { grid: grid.clone(), mat: Mat::identity(dim, dim), self_adjoint: true }
    }

    pub fn zeros(grid: &Arc<Grid2>) -> Self {
        let dim = 2 * grid.len();
        Self { grid: grid.clone(), mat: Mat::zeros(dim, dim), self_adjoint: true }
    }

    /// Pointwise multiplication by 2×2 blocks.
    pub fn multiplication(grid: &Arc<Grid2>, blocks: &[Block]) -> Self {
        let mut op = Self::zeros(grid);
        let mut sa = true;
        for (k, b) in blocks.iter().enumerate() {
            sa &= b.is_hermitian(0.0);
            op.set_block(k, k, *b);
        }
        op.self_adjoint = sa;
        op
    }

    pub fn grid(&self) -> &Arc<Grid2> {
        &self.grid
    }

    pub fn matrix(&self) -> &Mat<Complex64> {
        &self.mat
    }

    pub fn into_matrix(self) -> Mat<Complex64> {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.self_adjoint
    }

    /// Raw (weighted) block at (i, j).
    pub fn block(&self, i: usize, j: usize) -> Block {
        let m = &self.mat;
        Block::new(m[(2 * i, 2 * j)], m[(2 * i, 2 * j + 1)], m[(2 * i + 1, 2 * j)], m[(2 * i + 1, 2 * j + 1)])
    }

    pub fn set_block(&mut self, i: usize, j: usize, b: Block) {
        for a in 0..2 {
            for c in 0..2 {
                self.mat[(2 * i + a, 2 * j + c)] = b.0[a][c];
            }
        }
    }

    /// Kernel value K(xᵢ, xⱼ) recovered from the weighted entry.
    pub fn kernel_block(&self, i: usize, j: usize) -> Block {
        let sw = self.grid.sqrt_weights();
        self.block(i, j) * (1.0 / (sw[i] * sw[j]))
    }

    /// Collocation entry Kᵢⱼ wⱼ, i.e. the weight applied to f(xⱼ).
    pub fn collocation_block(&self, i: usize, j: usize) -> Block {
        let sw = self.grid.sqrt_weights();
        self.block(i, j) * (sw[j] / sw[i])
    }

    pub fn adjoint(&self) -> Self {
        Self { grid: self.grid.clone(), mat: self.mat.adjoint().to_owned(), self_adjoint: self.self_adjoint }
    }

    /// max |A − A†| over entries.
    pub fn asymmetry(&self) -> f64 {
        let m = &self.mat;
        let n = m.nrows();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for i in j..n {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        let m = &self.mat;
        let mut worst: f64 = 0.0;
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                worst = worst.max(m[(i, j)].norm());
            }
        }
        worst
    }

    pub fn apply(&self, f: &SpinorField) -> Result<SpinorField> {
        if !self.grid.same_as(&f.grid) {
            return Err(Error::GridMismatch);
        }
        let c = f.coefficients();
        let out = &self.mat * &c;
        Ok(SpinorField::from_coefficients(&self.grid, out.as_ref()))
    }

    pub fn add(&self, other: &BlockOperator) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            mat: &self.mat + &other.mat,
            self_adjoint: self.self_adjoint && other.self_adjoint,
        })
    }

    pub fn sub(&self, other: &BlockOperator) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            mat: &self.mat - &other.mat,
            self_adjoint: self.self_adjoint && other.self_adjoint,
        })
    }

    pub fn scale(&self, z: Complex64) -> Self {
        let mat = Mat::from_fn(self.mat.nrows(), self.mat.ncols(), |i, j| self.mat[(i, j)] * z);
        Self { grid: self.grid.clone(), mat, self_adjoint: self.self_adjoint && z.im == 0.0 }
    }

    fn check_grid(&self, other: &BlockOperator) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Left and right pointwise block multiplication: Lᵢ Aᵢⱼ Rⱼ.
    pub fn sandwich(&self, left: &[Block], right: &[Block]) -> Self {
        let n = self.grid.len();
        let mut out = self.clone();
        for i in 0..n {
            for j in 0..n {
                out.set_block(i, j, left[i] * self.block(i, j) * right[j]);
            }
        }
        out.self_adjoint = self.self_adjoint
            && left.iter().zip(right).all(|(l, r)| (l.adjoint() - *r).max_abs() == 0.0);
        out
    }

    /// Weighted sup-norm sup |K(xᵢ, xⱼ)| ⟨xᵢ⟩^{−γ} ⟨xⱼ⟩^{−γ}.
    pub fn weighted_supnorm(&self, gamma: f64) -> f64 {
        let nodes = self.grid.nodes();
        let w: Vec<f64> = nodes.iter().map(|&p| bracket(p).powf(-gamma)).collect();
        let n = nodes.len();
        let mut best: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                best = best.max(self.kernel_block(i, j).norm() * w[i] * w[j]);
            }
        }
        best
    }

    pub fn write_snapshot<W: Write>(&self, out: W, tag: &str, lambda: f64) -> Result<()> {
        let n = self.grid.len();
        let blocks = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| self.kernel_block(i, j));
        write_snapshot(out, n, n, self.grid.half_width(), tag, lambda, blocks)
    }
}

/// Nyström composition: the matrix product of the weighted forms.
pub fn operator_compose(a: &BlockOperator, b: &BlockOperator) -> Result<BlockOperator> {
    a.check_grid(b)?;
    Ok(BlockOperator { grid: a.grid.clone(), mat: &a.mat * &b.mat, self_adjoint: false })
}

/// Spinor samples ψ(xₖ) ∈ ℂ² at the grid nodes.
#[derive(Debug, Clone)]
pub struct SpinorField {
    grid: Arc<Grid2>,
    pub values: Vec<[Complex64; 2]>,
}

impl SpinorField {
    pub fn new(grid: &Arc<Grid2>, values: Vec<[Complex64; 2]>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Validation("field length does not match grid".into()));
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub fn from_fn(grid: &Arc<Grid2>, f: impl Fn(Point2) -> [Complex64; 2]) -> Self {
        Self { grid: grid.clone(), values: grid.nodes().iter().map(|&p| f(p)).collect() }
    }

    /// Field with coefficient vector c (values cₖ/√wₖ).
    pub fn from_coefficients(grid: &Arc<Grid2>, c: faer::MatRef<'_, Complex64>) -> Self {
        let sw = grid.sqrt_weights();
        let values = (0..grid.len()).map(|k| [c[(2 * k, 0)] / sw[k], c[(2 * k + 1, 0)] / sw[k]]).collect();
        Self { grid: grid.clone(), values }
    }

    pub fn coefficients(&self) -> Mat<Complex64> {
        let sw = self.grid.sqrt_weights();
        Mat::from_fn(2 * self.values.len(), 1, |r, _| self.values[r / 2][r % 2] * sw[r / 2])
    }

    pub fn grid(&self) -> &Arc<Grid2> {
        &self.grid
    }

    pub fn l2_norm(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.weights())
            .map(|(v, w)| w * (v[0].norm_sqr() + v[1].norm_sqr()))
            .sum::<f64>()
            .sqrt()
    }

    pub fn inner(&self, other: &SpinorField) -> Complex64 {
        self.values
            .iter()
            .zip(&other.values)
            .zip(self.grid.weights())
            .map(|((a, b), w)| (a[0].conj() * b[0] + a[1].conj() * b[1]) * *w)
            .sum()
    }

    /// ∫ ψ dx, componentwise.
    pub fn integral(&self) -> [Complex64; 2] {
        let mut s = [Complex64::default(); 2];
        for (v, w) in self.values.iter().zip(self.grid.weights()) {
            s[0] += v[0] * *w;
            s[1] += v[1] * *w;
        }
        s
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v[0].norm().max(v[1].norm())).fold(0.0, f64::max)
    }
}

/// Kernel values on arbitrary row × column point sets (row-major).
#[derive(Debug, Clone)]
pub struct KernelSamples {
    pub rows: Vec<Point2>,
    pub cols: Vec<Point2>,
    pub values: Vec<Block>,
}

impl KernelSamples {
    pub fn from_fn(rows: Vec<Point2>, cols: Vec<Point2>, f: impl Fn(Point2, Point2) -> Block) -> Self {
        let values = rows.iter().flat_map(|&x| cols.iter().map(move |&y| (x, y))).map(|(x, y)| f(x, y)).collect();
        Self { rows, cols, values }
    }

    /// Build from a (2·rows) × (2·cols) matrix of kernel values.
    pub fn from_matrix(rows: Vec<Point2>, cols: Vec<Point2>, m: faer::MatRef<'_, Complex64>) -> Self {
        let nc = cols.len();
        let values = (0..rows.len() * nc)
            .map(|k| {
                let (i, j) = (k / nc, k % nc);
                Block::new(m[(2 * i, 2 * j)], m[(2 * i, 2 * j + 1)], m[(2 * i + 1, 2 * j)], m[(2 * i + 1, 2 * j + 1)])
            })
            .collect();
        Self { rows, cols, values }
    }

    pub fn get(&self, i: usize, j: usize) -> Block {
        self.values[i * self.cols.len() + j]
    }

    pub fn weighted_supnorm(&self, gamma: f64) -> f64 {
        let wr: Vec<f64> = self.rows.iter().map(|&p| bracket(p).powf(-gamma)).collect();
        let wc: Vec<f64> = self.cols.iter().map(|&p| bracket(p).powf(-gamma)).collect();
        let nc = self.cols.len();
        self.values
            .iter()
            .enumerate()
            .map(|(k, b)| b.norm() * wr[k / nc] * wc[k % nc])
            .fold(0.0, f64::max)
    }

    pub fn sub(&self, other: &KernelSamples) -> Result<KernelSamples> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Validation("kernel samples live on different point sets".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| *a - *b).collect();
        Ok(KernelSamples { rows: self.rows.clone(), cols: self.cols.clone(), values })
    }

    pub fn write_snapshot<W: Write>(&self, out: W, half_width: f64, tag: &str, lambda: f64) -> Result<()> {
        write_snapshot(out, self.rows.len(), self.cols.len(), half_width, tag, lambda, self.values.iter().copied())
    }
}

const SNAPSHOT_MAGIC: &[u8; 8] = b"D2DSNAP1";

/// Snapshot layout (little endian): magic "D2DSNAP1", u64 rows, u64 cols,
/// f64 L, u32 tag length, tag bytes (UTF-8), f64 λ, then rows·cols blocks in
/// row-major order, each block as re/im interleaved doubles of
/// (b00, b01, b10, b11).
pub fn write_snapshot<W: Write>(
    mut out: W,
    rows: usize,
    cols: usize,
    half_width: f64,
    tag: &str,
    lambda: f64,
    blocks: impl Iterator<Item = Block>,
) -> Result<()> {
    out.write_all(SNAPSHOT_MAGIC)?;
    out.write_all(&(rows as u64).to_le_bytes())?;
    out.write_all(&(cols as u64).to_le_bytes())?;
    out.write_all(&half_width.to_le_bytes())?;
    out.write_all(&(tag.len() as u32).to_le_bytes())?;
    out.write_all(tag.as_bytes())?;
    out.write_all(&lambda.to_le_bytes())?;
    let mut count = 0;
    for b in blocks {
        for z in b.0.iter().flatten() {
            out.write_all(&z.re.to_le_bytes())?;
            out.write_all(&z.im.to_le_bytes())?;
        }
        count += 1;
    }
    if count != rows * cols {
        return Err(Error::Snapshot(format!("wrote {count} blocks, header says {}", rows * cols)));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub rows: usize,
    pub cols: usize,
    pub half_width: f64,
    pub tag: String,
    pub lambda: f64,
    pub blocks: Vec<Block>,
}

pub fn read_snapshot<R: Read>(mut input: R) -> Result<Snapshot> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let mut b8 = [0u8; 8];
    let mut b4 = [0u8; 4];
    let mut next_u64 = |r: &mut R| -> Result<u64> {
        r.read_exact(&mut b8)?;
        Ok(u64::from_le_bytes(b8))
    };
    let rows = next_u64(&mut input)? as usize;
    let cols = next_u64(&mut input)? as usize;
    let half_width = f64::from_bits(next_u64(&mut input)?);
    input.read_exact(&mut b4)?;
    let tag_len = u32::from_le_bytes(b4) as usize;
    let mut tag = vec![0u8; tag_len];
    input.read_exact(&mut tag)?;
    let tag = String::from_utf8(tag).map_err(|_| Error::Snapshot("tag is not UTF-8".into()))?;
    let lambda = f64::from_bits(next_u64(&mut input)?);
    let mut blocks = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let mut b = Block::ZERO;
        for z in b.0.iter_mut().flatten() {
            let re = f64::from_bits(next_u64(&mut input)?);
            let im = f64::from_bits(next_u64(&mut input)?);
            *z = Complex64::new(re, im);
        }
        blocks.push(b);
    }
    Ok(Snapshot { rows, cols, half_width, tag, lambda, blocks })
}
