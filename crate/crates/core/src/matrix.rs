//! Small dense complex matrices standing in for (possibly non-normal)
//! generators.
//!
//! Eigenvalues come from the complex Schur form; linear systems are solved by
//! LU with partial pivoting, never by forming inverses explicitly.

use crate::bcalculus::FunctionFamily;
use crate::error::{LabError, Result};
use crate::quadrature::{Quadrature, Segment};
use crate::rng::XorShift64Star;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cell::RefCell;
use std::f64::consts::PI;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Largest dimension solved by Kronecker vectorization.
pub const VECTORIZE_CAP: usize = 32;
/// Largest dimension accepted by [`lyapunov_solve`].
pub const LYAPUNOV_CAP: usize = 200;
/// Eigenbasis condition numbers above this are rejected.
pub const EIGEN_COND_CAP: f64 = 1e6;
/// Scaling exponents above this are reported as overscaling.
pub const MAX_SQUARINGS: u32 = 50;

/// A square complex matrix with spectrum in the open left half-plane.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    matrix: CMatrix,
    eigenvalues: Vec<Complex64>,
    abscissa: f64,
}

impl DenseOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        check_square(&matrix)?;
        let eigenvalues = eigenvalues_of(&matrix)?;
        let abscissa = eigenvalues
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        if !(abscissa < 0.0) {
            return Err(LabError::InvalidInput(format!(
                "generator must have spectral abscissa < 0, got {abscissa}"
            )));
        }
        Ok(Self {
            matrix,
            eigenvalues,
            abscissa,
        })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        Self::new(matrix_from_rows(rows)?)
    }

    pub fn diagonal(entries: &[Complex64]) -> Result<Self> {
        Self::new(CMatrix::from_diagonal(&CVector::from_column_slice(entries)))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    /// max Re λ over the spectrum.
    pub fn abscissa(&self) -> f64 {
        self.abscissa
    }

    pub fn is_invertible(&self) -> bool {
        true
    }

    /// A⁻¹, obtained by an LU solve against the identity.
    pub fn inverse(&self) -> Result<CMatrix> {
        solve(&self.matrix, &CMatrix::identity(self.dim(), self.dim()))
    }

    /// True when ‖A*A − AA*‖ is at rounding level.
    pub fn is_normal(&self) -> bool {
        let a = &self.matrix;
        let comm = a.adjoint() * a - a * a.adjoint();
        comm.norm() <= 1e-12 * a.norm_squared().max(1.0)
    }
}

impl Serialize for DenseOperator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        matrix_to_rows(&self.matrix).serialize(s)
    }
}

impl<'de> Deserialize<'de> for DenseOperator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        let rows: Vec<Vec<Complex64>> = rows
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|[re, im]| Complex64::new(re, im))
                    .collect()
            })
            .collect();
        DenseOperator::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Row-major `[[[re, im], ...], ...]`.
pub fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

pub fn matrix_from_rows(rows: &[Vec<Complex64>]) -> Result<CMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(LabError::InvalidInput(
            "matrix must be square and non-empty".into(),
        ));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn check_square(m: &CMatrix) -> Result<()> {
    if m.nrows() == 0 || m.nrows() != m.ncols() {
        return Err(LabError::InvalidInput(format!(
            "matrix must be square and non-empty, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(LabError::InvalidInput(
            "matrix has non-finite entries".into(),
        ));
    }
    Ok(())
}

/// Solves M X = B by LU with partial pivoting.
pub fn solve(m: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    m.clone()
        .lu()
        .solve(b)
        .filter(|x| x.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
        .ok_or_else(|| {
            LabError::Singular(format!(
                "{}x{} system has a zero pivot",
                m.nrows(),
                m.ncols()
            ))
        })
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

fn schur(m: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let s = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| LabError::InvalidInput("Schur iteration did not converge".into()))?;
    Ok(s.unpack())
}

/// Eigenvalues from the diagonal of the complex Schur form.
pub fn eigenvalues_of(m: &CMatrix) -> Result<Vec<Complex64>> {
    check_square(m)?;
    let (_, t) = schur(m)?;
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Eigenvalues, unit-norm eigenvectors (columns) and the 2-norm condition
/// number of the eigenvector matrix.
#[derive(Debug, Clone)]
pub struct Eigendecomposition {
    pub values: Vec<Complex64>,
    pub vectors: CMatrix,
    pub condition: f64,
}

/// Eigendecomposition by back substitution on the Schur form.
///
/// Rejects bases with condition number above [`EIGEN_COND_CAP`], which
/// includes defective matrices.
pub fn eigendecomposition(m: &CMatrix) -> Result<Eigendecomposition> {
    check_square(m)?;
    let n = m.nrows();
    let (q, t) = schur(m)?;
    let small = f64::EPSILON * t.norm().max(f64::MIN_POSITIVE);
    let mut y = CMatrix::zeros(n, n);
    for k in 0..n {
        let tkk = t[(k, k)];
        y[(k, k)] = ONE;
        for j in (0..k).rev() {
            let mut num = ZERO;
            for l in j + 1..=k {
                num += t[(j, l)] * y[(l, k)];
            }
            if num == ZERO {
                continue;
            }
            let mut den = t[(j, j)] - tkk;
            if den.norm() < small {
                den = Complex64::new(small, 0.0);
            }
            y[(j, k)] = -num / den;
        }
    }
    let mut v = q * y;
    for mut col in v.column_iter_mut() {
        let nrm = col.norm();
        col /= Complex64::new(nrm, 0.0);
    }
    let sv = v.clone().svd(false, false).singular_values;
    let condition = sv.max() / sv.min();
    if !(condition <= EIGEN_COND_CAP) {
        return Err(LabError::IllConditioned(condition));
    }
    Ok(Eigendecomposition {
        values: (0..n).map(|i| t[(i, i)]).collect(),
        vectors: v,
        condition,
    })
}

/// Applies a scalar function through the eigendecomposition: V g(Λ) V⁻¹.
pub fn apply_spectral(m: &CMatrix, g: impl Fn(Complex64) -> Complex64) -> Result<CMatrix> {
    let e = eigendecomposition(m)?;
    let n = m.nrows();
    let mut vg = e.vectors.clone();
    for (k, mut col) in vg.column_iter_mut().enumerate() {
        col *= g(e.values[k]);
    }
    // X V = V g(Λ)  ⇔  Vᵀ Xᵀ = (V g(Λ))ᵀ
    let xt = solve(&e.vectors.transpose(), &vg.transpose())?;
    debug_assert_eq!(xt.nrows(), n);
    Ok(xt.transpose())
}

/// (−A)^α with the principal branch, via the eigendecomposition.
pub fn frac_power(a: &DenseOperator, alpha: f64) -> Result<CMatrix> {
    if !alpha.is_finite() {
        return Err(LabError::InvalidInput(format!(
            "exponent must be finite, got {alpha}"
        )));
    }
    apply_spectral(a.matrix(), |z| (-z).powf(alpha))
}

const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];
// Largest 1-norm for which the degree-13 approximant is accurate to unit roundoff.
const THETA13: f64 = 5.371_920_351_148_152;

fn norm1(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// e^{M} for any square matrix by scaling and squaring around the
/// degree-13 diagonal Padé approximant.
pub fn expm_matrix(m: &CMatrix) -> Result<CMatrix> {
    check_square(m)?;
    let n = m.nrows();
    let nrm = norm1(m);
    let s = if nrm > THETA13 {
        (nrm / THETA13).log2().ceil().max(0.0) as u32
    } else {
        0
    };
    if s > MAX_SQUARINGS {
        return Err(LabError::Overscaling {
            norm: nrm,
            squarings: s,
        });
    }
    let a = m * Complex64::new(0.5f64.powi(s as i32), 0.0);
    let c = |k: usize| Complex64::new(PADE13[k], 0.0);
    let id = CMatrix::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let u_inner = &a6 * (&a6 * c(13) + &a4 * c(11) + &a2 * c(9))
        + &a6 * c(7)
        + &a4 * c(5)
        + &a2 * c(3)
        + &id * c(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * c(12) + &a4 * c(10) + &a2 * c(8))
        + &a6 * c(6)
        + &a4 * c(4)
        + &a2 * c(2)
        + &id * c(0);
    let mut r = solve(&(&v - &u), &(&v + &u))?;
    for _ in 0..s {
        r = &r * &r;
    }
    if r.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(LabError::Overscaling {
            norm: nrm,
            squarings: s,
        });
    }
    Ok(r)
}

/// e^{At}.
pub fn expm(a: &DenseOperator, t: f64) -> Result<CMatrix> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(LabError::InvalidInput(format!(
            "time must be nonnegative, got {t}"
        )));
    }
    expm_matrix(&(a.matrix() * Complex64::new(t, 0.0)))
}

/// (I + τA/2)(I − τA/2)⁻¹, computed by solving (I − τA/2)X = I + τA/2.
pub fn cayley(a: &DenseOperator, tau: f64) -> Result<CMatrix> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(LabError::InvalidInput(format!(
            "stepsize must be positive, got {tau}"
        )));
    }
    let n = a.dim();
    let h = a.matrix() * Complex64::new(0.5 * tau, 0.0);
    let id = CMatrix::identity(n, n);
    let lhs = &id - &h;
    let rhs = &id + &h;
    let x = solve(&lhs, &rhs)?;
    let res = &lhs * &x - &rhs;
    let scale = norm1(&lhs);
    for j in 0..n {
        let r = res.column(j).norm();
        let bound = 1e-12 * (scale * x.column(j).norm() + rhs.column(j).norm());
        if r > bound {
            return Err(LabError::Singular(format!(
                "Cayley solve residual {r:e} exceeds {bound:e} in column {j}"
            )));
        }
    }
    Ok(x)
}

/// Factored I − τA/2 for repeated Cayley steps.
pub struct CayleyStepper {
    lu: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
    plus: CMatrix,
}

impl CayleyStepper {
    pub fn new(a: &DenseOperator, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(LabError::InvalidInput(format!(
                "stepsize must be positive, got {tau}"
            )));
        }
        let n = a.dim();
        let h = a.matrix() * Complex64::new(0.5 * tau, 0.0);
        let id = CMatrix::identity(n, n);
        Ok(Self {
            lu: (&id - &h).lu(),
            plus: &id + &h,
        })
    }

    /// x ↦ (I − τA/2)⁻¹(I + τA/2)x.
    pub fn step(&self, x: &CVector) -> Result<CVector> {
        self.lu
            .solve(&(&self.plus * x))
            .ok_or_else(|| LabError::Singular("I - tau A/2 is singular".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LyapunovMethod {
    Vectorized,
    Doubling,
}

#[derive(Debug, Clone)]
pub struct LyapunovSolution {
    pub p: CMatrix,
    /// Frobenius norm of (A − ξI)*P + P(A − ξI) + I.
    pub residual: f64,
    pub method: LyapunovMethod,
}

/// P with (A − ξI)*P + P(A − ξI) = −I.
///
/// Dimensions up to [`VECTORIZE_CAP`] solve the n²×n² Kronecker system;
/// larger ones, up to [`LYAPUNOV_CAP`], sum the integral ∫₀^∞ e^{M*t}e^{Mt} dt
/// by interval doubling.
pub fn lyapunov_solve(a: &DenseOperator, xi: f64) -> Result<LyapunovSolution> {
    if !(xi >= 0.0 && xi.is_finite()) {
        return Err(LabError::InvalidInput(format!(
            "xi must be nonnegative, got {xi}"
        )));
    }
    let n = a.dim();
    if n > LYAPUNOV_CAP {
        return Err(LabError::DimensionCap {
            dim: n,
            cap: LYAPUNOV_CAP,
        });
    }
    if !(a.abscissa() - xi < 0.0) {
        return Err(LabError::Precondition(format!(
            "A - xi I must be stable; spectral abscissa is {}",
            a.abscissa() - xi
        )));
    }
    let id = CMatrix::identity(n, n);
    let m = a.matrix() - &id * Complex64::new(xi, 0.0);
    let (p, method) = if n <= VECTORIZE_CAP {
        (lyapunov_vectorized(&m)?, LyapunovMethod::Vectorized)
    } else {
        (lyapunov_doubling(&m)?, LyapunovMethod::Doubling)
    };
    // Symmetrize away rounding.
    let p = (&p + p.adjoint()) * Complex64::new(0.5, 0.0);
    let residual = (m.adjoint() * &p + &p * &m + &id).norm();
    let min_eig = SymmetricEigen::new(p.clone()).eigenvalues.min();
    if !(min_eig > 0.0) {
        return Err(LabError::Indefinite);
    }
    Ok(LyapunovSolution {
        p,
        residual,
        method,
    })
}

fn lyapunov_vectorized(m: &CMatrix) -> Result<CMatrix> {
    let n = m.nrows();
    let id = CMatrix::identity(n, n);
    // Column-major vec: vec(M*P) = (I ⊗ M*) vec P, vec(PM) = (Mᵀ ⊗ I) vec P.
    let big = id.kronecker(&m.adjoint()) + m.transpose().kronecker(&id);
    let rhs = CVector::from_iterator(n * n, id.iter().map(|z| -z));
    let x = big
        .lu()
        .solve(&rhs)
        .ok_or_else(|| LabError::Singular("Kronecker Lyapunov system is singular".into()))?;
    Ok(CMatrix::from_column_slice(n, n, x.as_slice()))
}

// Gauss-Legendre nodes and weights on [-1, 1], 12 points (positive half).
#[allow(clippy::excessive_precision)]
const GL12_X: [f64; 6] = [
    0.125_233_408_511_468_92,
    0.367_831_498_998_180_2,
    0.587_317_954_286_617_4,
    0.769_902_674_194_304_7,
    0.904_117_256_370_474_9,
    0.981_560_634_246_719_3,
];
const GL12_W: [f64; 6] = [
    0.249_147_045_813_402_8,
    0.233_492_536_538_354_8,
    0.203_167_426_723_065_9,
    0.160_078_328_543_346_2,
    0.106_939_325_995_318_4,
    0.047_175_336_386_511_83,
];

fn lyapunov_doubling(m: &CMatrix) -> Result<CMatrix> {
    let n = m.nrows();
    // Short initial horizon so that the integrand is resolved by one rule.
    let h = 0.25 / norm1(m).max(1e-300);
    let mut p = CMatrix::zeros(n, n);
    for (&x, &w) in GL12_X.iter().zip(&GL12_W) {
        for t in [0.5 * h * (1.0 - x), 0.5 * h * (1.0 + x)] {
            let e = expm_matrix(&(m * Complex64::new(t, 0.0)))?;
            p += e.adjoint() * &e * Complex64::new(0.5 * h * w, 0.0);
        }
    }
    let mut e = expm_matrix(&(m * Complex64::new(h, 0.0)))?;
    for _ in 0..200 {
        let ep = e.norm_squared();
        p = &p + e.adjoint() * &p * &e;
        if ep <= 1e-18 {
            return Ok(p);
        }
        e = &e * &e;
    }
    Err(LabError::Quadrature {
        a: 0.0,
        b: h * 2f64.powi(200),
        error: e.norm_squared(),
        evaluations: 200,
    })
}

/// sup over sampled t ∈ [0, t_max] of ‖e^{−Bt}‖.
///
/// Samples t = 0 and a geometric grid with eight points per octave from
/// 2^{−10} to t_max.
pub fn semigroup_bound(b: &CMatrix, t_max: f64) -> Result<f64> {
    check_square(b)?;
    let neg = -b;
    let mut k = 1.0f64;
    let mut t = 2f64.powi(-10);
    let ratio = 2f64.powf(1.0 / 8.0);
    while t <= t_max {
        let e = expm_matrix(&(&neg * Complex64::new(t, 0.0)))?;
        k = k.max(spectral_norm(&e));
        t *= ratio;
    }
    Ok(k)
}

#[derive(Debug, Clone)]
pub struct BCalcResult {
    pub value: CMatrix,
    /// Outer quadrature error estimate (max over entries).
    pub error: f64,
    /// Measured sup_t ‖e^{−Bt}‖.
    pub k: f64,
    pub evaluations: usize,
}

/// f(B) = f(∞)I − (2/π)∫₀^∞ ξ ∫_ℝ (ξ − iη + B)^{−2} f'(ξ + iη) dη dξ.
///
/// The η-integral is folded onto [0, ∞), split at 0 and at |Im μ| for every
/// eigenvalue μ of B, and its tail is integrated on a mapped segment rather
/// than truncated.
pub fn bcalc_apply(f: FunctionFamily, b: &CMatrix) -> Result<BCalcResult> {
    let f = f.validate()?;
    check_square(b)?;
    let n = b.nrows();
    let mu = eigenvalues_of(b)?;
    let min_re = mu.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    if min_re < -1e-12 {
        return Err(LabError::UnboundedSemigroup(format!(
            "B has an eigenvalue with real part {min_re}"
        )));
    }
    let k = semigroup_bound(b, 1e3)?;
    if !(k < 1e8) {
        return Err(LabError::UnboundedSemigroup(format!(
            "sampled sup ‖e^(-Bt)‖ = {k:e}"
        )));
    }

    let decay_inner = f.tail_decay() + 2.0;
    let decay_outer = f.tail_decay();
    let mut eta_breaks: Vec<f64> = mu.iter().map(|z| z.im.abs()).chain([0.0]).collect();
    eta_breaks.sort_by(f64::total_cmp);
    eta_breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));

    let dim = 2 * n * n;
    let id = CMatrix::identity(n, n);
    let inner_q = Quadrature {
        abs_tol: 1e-15,
        rel_tol: 1e-11,
        max_intervals: 4000,
    };
    let failure: RefCell<Option<LabError>> = RefCell::new(None);

    // Writes Re/Im of (ξ − iη + B)^{−2} f'(ξ + iη), summed over ±η.
    let kernel = |xi: f64, eta: f64, out: &mut [f64]| {
        out.iter_mut().for_each(|v| *v = 0.0);
        for e in [eta, -eta] {
            let shift = Complex64::new(xi, -e);
            let r = match solve(&(b + &id * shift), &id) {
                Ok(r) => r,
                Err(err) => {
                    failure.borrow_mut().get_or_insert(err);
                    out.iter_mut().for_each(|v| *v = f64::NAN);
                    return;
                }
            };
            let d = f.derivative(Complex64::new(xi, e));
            let r2 = &r * &r * d;
            for (i, z) in r2.iter().enumerate() {
                out[2 * i] += z.re;
                out[2 * i + 1] += z.im;
            }
            if eta == 0.0 {
                // The fold counts η = 0 once.
                for (i, z) in r2.iter().enumerate() {
                    out[2 * i] -= 0.5 * z.re;
                    out[2 * i + 1] -= 0.5 * z.im;
                }
                break;
            }
        }
    };

    let inner = |xi: f64, out: &mut [f64]| {
        let scale = xi + 1.0;
        let last = eta_breaks.last().copied().unwrap_or(0.0) + scale;
        let mut segs: Vec<Segment> = eta_breaks
            .windows(2)
            .map(|w| Segment::finite(w[0], w[1]))
            .collect();
        segs.push(Segment::finite(*eta_breaks.last().unwrap(), last));
        segs.push(Segment::power_tail(last, decay_inner));
        match inner_q.integrate_vec_segments(dim, |eta, o: &mut [f64]| kernel(xi, eta, o), &segs) {
            Ok(est) => {
                for (o, v) in out.iter_mut().zip(&est.value) {
                    *o = xi * v;
                }
            }
            Err(err) => {
                failure.borrow_mut().get_or_insert(err);
                out.iter_mut().for_each(|v| *v = f64::NAN);
            }
        }
    };

    let mut xi_breaks = vec![0.0, 1.0];
    match f {
        FunctionFamily::Fta { t, alpha } if 2.0 * t / alpha - 1.0 > 1.0 => {
            xi_breaks.push(2.0 * t / alpha - 1.0)
        }
        FunctionFamily::Hshift { t } if t - 1.0 > 1.0 => xi_breaks.push(t - 1.0),
        _ => {}
    }
    let last = *xi_breaks.last().unwrap();
    let mut segs: Vec<Segment> = xi_breaks
        .windows(2)
        .map(|w| Segment::finite(w[0], w[1]))
        .collect();
    segs.push(Segment::power_tail(last.max(1.0), decay_outer));
    let outer_q = Quadrature {
        abs_tol: 1e-12,
        rel_tol: 1e-9,
        max_intervals: 2000,
    };
    let est = outer_q.integrate_vec_segments(dim, inner, &segs);
    if let Some(err) = failure.into_inner() {
        return Err(err);
    }
    let est = est?;
    let c = -2.0 / PI;
    let value = CMatrix::from_fn(n, n, |i, j| {
        let idx = i + j * n;
        let integral = Complex64::new(est.value[2 * idx], est.value[2 * idx + 1]);
        let diag = if i == j { f.at_infinity() } else { ZERO };
        diag + integral * c
    });
    Ok(BCalcResult {
        value,
        error: est.error * 2.0 / PI,
        k,
        evaluations: est.evaluations,
    })
}

fn complex_normal(rng: &mut XorShift64Star) -> Complex64 {
    Complex64::new(rng.normal(), rng.normal()) / 2f64.sqrt()
}

/// Unitary Q from the QR factorization of a complex Gaussian matrix.
pub fn random_unitary(n: usize, rng: &mut XorShift64Star) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| complex_normal(rng));
    g.qr().q()
}

/// Q D Q* with eigenvalues Re ∈ [−3, −0.2], Im ∈ [−3, 3].
pub fn random_stable_normal(n: usize, seed: u64) -> Result<DenseOperator> {
    let mut rng = XorShift64Star::new(seed);
    let d: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.uniform(-3.0, -0.2), rng.uniform(-3.0, 3.0)))
        .collect();
    let q = random_unitary(n, &mut rng);
    let dm = CMatrix::from_diagonal(&CVector::from_column_slice(&d));
    DenseOperator::new(&q * dm * q.adjoint())
}

/// Complex Gaussian matrix scaled by 1/√n and shifted to spectral abscissa −1/2.
pub fn random_stable(n: usize, seed: u64) -> Result<DenseOperator> {
    let mut rng = XorShift64Star::new(seed);
    let scale = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
    let g = CMatrix::from_fn(n, n, |_, _| complex_normal(&mut rng) * scale);
    let ab = eigenvalues_of(&g)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    DenseOperator::new(g - CMatrix::identity(n, n) * Complex64::new(ab + 0.5, 0.0))
}

/// diag(−2+i, −3, −4−2i, −5) plus an upper-triangular coupling, chosen so that
/// the Hermitian part of A + I is negative definite; hence ‖e^{At}‖ ≤ e^{−t}.
pub fn contractive_test_matrix() -> DenseOperator {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let rows = vec![
        vec![c(-2.0, 1.0), c(0.5, 0.0), c(0.3, 0.0), c(0.0, 0.0)],
        vec![c(0.0, 0.0), c(-3.0, 0.0), c(0.5, 0.2), c(0.0, 0.0)],
        vec![c(0.0, 0.0), c(0.0, 0.0), c(-4.0, -2.0), c(0.5, 0.0)],
        vec![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-5.0, 0.0)],
    ];
    DenseOperator::from_rows(&rows).expect("fixed test matrix is stable")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bcalculus::b0_norm;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel_err(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    fn diag(v: &[f64]) -> DenseOperator {
        DenseOperator::diagonal(&v.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn rejects_unstable_and_nonsquare() {
        assert!(DenseOperator::diagonal(&[c(1.0, 0.0)]).is_err());
        assert!(DenseOperator::diagonal(&[c(0.0, 1.0)]).is_err());
        assert!(matrix_from_rows(&[vec![c(1.0, 0.0)], vec![]]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let a = contractive_test_matrix();
        let s = serde_json::to_string(&a).unwrap();
        assert!(s.starts_with("[[[-2.0,1.0],[0.5,0.0]"));
        let b: DenseOperator = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
        assert!(serde_json::from_str::<DenseOperator>("[[[1.0,0.0]]]").is_err());
    }

    #[test]
    fn expm_diagonal_and_jordan() {
        let e = expm(&diag(&[-1.0, -2.0]), 0.5).unwrap();
        assert!((e[(0, 0)] - c((-0.5f64).exp(), 0.0)).norm() < 1e-15);
        assert!((e[(1, 1)] - c((-1f64).exp(), 0.0)).norm() < 1e-15);
        assert!(e[(0, 1)].norm() < 1e-16);

        let j = DenseOperator::from_rows(&[
            vec![c(-1.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(-1.0, 0.0)],
        ])
        .unwrap();
        let e = expm(&j, 1.0).unwrap();
        let em1 = (-1f64).exp();
        let expected =
            CMatrix::from_row_slice(2, 2, &[c(em1, 0.0), c(em1, 0.0), c(0.0, 0.0), c(em1, 0.0)]);
        assert!(rel_err(&e, &expected) < 1e-14);
    }

    #[test]
    fn expm_matches_eigendecomposition_on_normal() {
        for seed in 1..6 {
            let a = random_stable_normal(8, seed).unwrap();
            for &t in &[0.1, 1.0, 7.5] {
                let e = expm(&a, t).unwrap();
                let oracle = apply_spectral(a.matrix(), |z| (z * t).exp()).unwrap();
                assert!(
                    rel_err(&e, &oracle) < 1e-10,
                    "seed {seed} t {t}: {}",
                    rel_err(&e, &oracle)
                );
            }
        }
    }

    #[test]
    fn semigroup_law() {
        let a = random_stable(6, 3).unwrap();
        let lhs = expm(&a, 0.7).unwrap() * expm(&a, 1.9).unwrap();
        let rhs = expm(&a, 2.6).unwrap();
        assert!(rel_err(&lhs, &rhs) < 1e-9);
    }

    #[test]
    fn expm_reports_overscaling() {
        let a = diag(&[-1.0]);
        assert!(matches!(expm(&a, 1e300), Err(LabError::Overscaling { .. })));
    }

    #[test]
    fn cayley_scalars() {
        let x = cayley(&diag(&[-1.0]), 2.0).unwrap();
        assert_eq!(x[(0, 0)], c(0.0, 0.0));
        let a = DenseOperator::diagonal(&[c(-1.0, 1.0)]).unwrap();
        let x = cayley(&a, 2.0).unwrap();
        assert!((x[(0, 0)] - c(-0.2, 0.4)).norm() < 1e-15);
    }

    #[test]
    fn cayley_singular_values_on_normal() {
        let a = random_stable_normal(6, 11).unwrap();
        let tau = 0.8;
        let x = cayley(&a, tau).unwrap();
        let mut sv: Vec<f64> = x
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .collect();
        let mut expected: Vec<f64> = a
            .eigenvalues()
            .iter()
            .map(|&l| ((1.0 + 0.5 * tau * l) / (1.0 - 0.5 * tau * l)).norm())
            .collect();
        sv.sort_by(f64::total_cmp);
        expected.sort_by(f64::total_cmp);
        for (s, e) in sv.iter().zip(&expected) {
            assert!((s - e).abs() < 1e-12);
        }
    }

    #[test]
    fn cayley_shares_eigenvectors() {
        let a = random_stable_normal(5, 2).unwrap();
        let tau = 1.3;
        let x = cayley(&a, tau).unwrap();
        let e = eigendecomposition(a.matrix()).unwrap();
        for k in 0..5 {
            let v = e.vectors.column(k).into_owned();
            let l = e.values[k];
            let mu = (1.0 + 0.5 * tau * l) / (1.0 - 0.5 * tau * l);
            assert!((&x * &v - &v * mu).norm() < 1e-12);
        }
    }

    #[test]
    fn lyapunov_closed_forms() {
        let s = lyapunov_solve(&diag(&[-1.0, -1.0]), 0.0).unwrap();
        assert!(rel_err(&s.p, &(CMatrix::identity(2, 2) * c(0.5, 0.0))) < 1e-15);
        let s = lyapunov_solve(&diag(&[-1.0, -2.0]), 0.0).unwrap();
        assert!((s.p[(0, 0)] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((s.p[(1, 1)] - c(0.25, 0.0)).norm() < 1e-15);
        assert!(s.p[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn lyapunov_shift_precondition() {
        assert!(matches!(
            lyapunov_solve(&diag(&[-1.0]), 0.0).map(|s| s.method),
            Ok(LyapunovMethod::Vectorized)
        ));
        // ξ > 0 moves the spectrum further left; never violates stability.
        assert!(lyapunov_solve(&diag(&[-1.0]), 3.0).is_ok());
    }

    #[test]
    fn lyapunov_matches_quadrature_on_random_stable() {
        let a = random_stable(8, 21).unwrap();
        let xi = 0.25;
        let sol = lyapunov_solve(&a, xi).unwrap();
        assert!(sol.residual <= 1e-10, "{}", sol.residual);
        let m = a.matrix() - CMatrix::identity(8, 8) * c(xi, 0.0);
        let est = Quadrature::with_tolerances(1e-14, 1e-11)
            .integrate_vec_segments(
                128,
                |t, out: &mut [f64]| {
                    let e = expm_matrix(&(&m * c(t, 0.0))).unwrap();
                    let g = e.adjoint() * e;
                    for (i, z) in g.iter().enumerate() {
                        out[2 * i] = z.re;
                        out[2 * i + 1] = z.im;
                    }
                },
                &[Segment::tail(0.0)],
            )
            .unwrap();
        let q = CMatrix::from_fn(8, 8, |i, j| {
            c(est.value[2 * (i + 8 * j)], est.value[2 * (i + 8 * j) + 1])
        });
        assert!(rel_err(&sol.p, &q) < 1e-8, "{}", rel_err(&sol.p, &q));
    }

    #[test]
    fn lyapunov_doubling_agrees_with_vectorization() {
        let a = random_stable(12, 5).unwrap();
        let m = a.matrix().clone();
        let v = lyapunov_vectorized(&m).unwrap();
        let d = lyapunov_doubling(&m).unwrap();
        assert!(rel_err(&d, &v) < 1e-10, "{}", rel_err(&d, &v));
    }

    #[test]
    fn lyapunov_fallback_above_cap() {
        let a = random_stable_normal(40, 9).unwrap();
        let s = lyapunov_solve(&a, 0.0).unwrap();
        assert_eq!(s.method, LyapunovMethod::Doubling);
        assert!(s.residual < 1e-10, "{}", s.residual);
    }

    #[test]
    fn lyapunov_dimension_cap() {
        let big = CMatrix::identity(201, 201) * c(-1.0, 0.0);
        let a = DenseOperator::new(big).unwrap();
        assert!(matches!(
            lyapunov_solve(&a, 0.0),
            Err(LabError::DimensionCap { .. })
        ));
    }

    #[test]
    fn frac_power_cases() {
        let a = diag(&[-1.0, -4.0]);
        let h = frac_power(&a, 0.5).unwrap();
        assert!((h[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((h[(1, 1)] - c(2.0, 0.0)).norm() < 1e-15);

        let b = random_stable(5, 4).unwrap();
        let inv = frac_power(&b, -1.0).unwrap();
        let neg_inv = b.inverse().unwrap() * c(-1.0, 0.0);
        assert!(rel_err(&inv, &neg_inv) < 1e-10);

        for seed in 0..4 {
            let n = random_stable_normal(6, seed).unwrap();
            let p = frac_power(&n, 0.7).unwrap() * frac_power(&n, -0.7).unwrap();
            assert!(rel_err(&p, &CMatrix::identity(6, 6)) < 1e-10);
        }
    }

    #[test]
    fn defective_rejected() {
        let j = DenseOperator::from_rows(&[
            vec![c(-1.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(-1.0, 0.0)],
        ])
        .unwrap();
        assert!(matches!(
            frac_power(&j, 0.5),
            Err(LabError::IllConditioned(_))
        ));
    }

    #[test]
    fn contractive_matrix_is_contractive() {
        let a = contractive_test_matrix();
        assert!(!a.is_normal());
        let shifted = a.matrix() + CMatrix::identity(4, 4);
        let herm = (&shifted + shifted.adjoint()) * c(0.5, 0.0);
        assert!(SymmetricEigen::new(herm).eigenvalues.max() < 0.0);
        let k = semigroup_bound(&(-a.matrix() - CMatrix::identity(4, 4)), 100.0).unwrap();
        assert!((k - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bcalc_scalar_hshift() {
        let b = CMatrix::zeros(1, 1);
        let r = bcalc_apply(FunctionFamily::Hshift { t: 1.0 }, &b).unwrap();
        assert!(
            (r.value[(0, 0)] - c((-1f64).exp(), 0.0)).norm() < 1e-7,
            "{}",
            r.value[(0, 0)]
        );
    }

    #[test]
    fn bcalc_diagonal_hshift() {
        let t = 2.0;
        let b = CMatrix::from_diagonal(&CVector::from_column_slice(&[c(0.0, 0.0), c(1.0, 0.0)]));
        let r = bcalc_apply(FunctionFamily::Hshift { t }, &b).unwrap();
        assert!((r.value[(0, 0)] - c((-t).exp(), 0.0)).norm() < 1e-7);
        assert!((r.value[(1, 1)] - c((-t / 2.0).exp(), 0.0)).norm() < 1e-7);
        assert!(r.value[(0, 1)].norm() < 1e-8);
    }

    #[test]
    fn bcalc_complex_scalar() {
        let mu = c(0.3, 2.0);
        let f = FunctionFamily::Fta { t: 1.5, alpha: 0.5 };
        let b = CMatrix::from_element(1, 1, mu);
        let r = bcalc_apply(f, &b).unwrap();
        assert!((r.value[(0, 0)] - f.eval(mu)).norm() < 1e-7);
    }

    #[test]
    fn bcalc_matches_inverse_generator_semigroup() {
        let a = contractive_test_matrix();
        let n = a.dim();
        let b = -a.matrix() - CMatrix::identity(n, n);
        let r = bcalc_apply(FunctionFamily::Fta { t: 1.0, alpha: 1.0 }, &b).unwrap();
        let inv = a.inverse().unwrap();
        let oracle = expm_matrix(&inv).unwrap() * (-inv);
        assert!(
            (&r.value - &oracle).norm() < 1e-6,
            "{}",
            (&r.value - &oracle).norm()
        );
        let bound = 2.0
            * r.k
            * r.k
            * b0_norm(FunctionFamily::Fta { t: 1.0, alpha: 1.0 })
                .unwrap()
                .b0;
        assert!(spectral_norm(&r.value) <= bound + 1e-6);
    }
}
