//! Piecewise-constant propagation of the augmented system.
//!
//! Every segment generator `A(φ) = K1⊗σz + K2⊗Ω(cosφ σx + sinφ σy)` squares to
//! `¼(K1² + Ω²K2²) ⊗ I₂`, independently of the phase. Summing the even and odd
//! parts of the exponential series separately gives
//!
//! ```text
//! exp(-iA(φ)Δt) = C ⊗ I₂ − iΔt [S K1 ⊗ σz + S K2 ⊗ Ω(cosφ σx + sinφ σy)]
//! C = Σ (−Δt²/4)^m M^m / (2m)!      S = Σ (−Δt²/4)^m M^m / (2m+1)!
//! ```
//!
//! with `M = K1² + Ω²K2²`. `C` and `S` depend on the step length only, so a
//! [`StepKernel`] is built once per `(order, Ω, Δt)` and every segment then
//! costs a handful of small real-by-complex products. The phase derivative of a
//! segment is exact: only the `S K2` term depends on `φ`.
//!
//! The fast path never forms `N x N` matrices. Starting from `U₀₀ = I`, all other
//! blocks zero, only the first block column of the propagator is needed, so
//! states are stored as a list of 2x2 blocks ([`Block`]).

mod expm;

pub use expm::reference_expm;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{kron, pauli_set, AugmentedGenerator, ComplexMatrix, RobustnessOrder};
use crate::error::{Error, Result};

const MAX_SERIES_TERMS: usize = 200;

/// Row-major 2x2 complex block `[a00, a01, a10, a11]`.
pub type Block = [Complex64; 4];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const ZERO_BLOCK: Block = [ZERO; 4];
pub(crate) const IDENTITY_BLOCK: Block = [ONE, ZERO, ZERO, ONE];

pub fn block_to_matrix(b: &Block) -> ComplexMatrix {
    ComplexMatrix::from_row_major(2, 2, b.to_vec()).expect("2x2 block")
}

pub fn matrix_to_block(m: &ComplexMatrix) -> Block {
    debug_assert_eq!((m.rows(), m.cols()), (2, 2));
    [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]
}

/// Full-power piecewise-constant pulse: `u_x = Ω cosφ_j`, `u_y = Ω sinφ_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPulse {
    pub phases: Vec<f64>,
    pub segment_duration: f64,
    pub omega: f64,
}

impl ControlPulse {
    pub fn new(phases: Vec<f64>, segment_duration: f64, omega: f64) -> Result<Self> {
        if !(segment_duration.is_finite() && segment_duration > 0.0) {
            return Err(Error::InvalidDuration(segment_duration));
        }
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidOmega(omega));
        }
        Ok(Self { phases, segment_duration, omega })
    }

    /// Splits `total_duration` into `phases.len()` equal segments.
    pub fn with_total_duration(phases: Vec<f64>, total_duration: f64, omega: f64) -> Result<Self> {
        if phases.is_empty() {
            return Err(Error::InvalidConfig("a pulse with a positive duration needs at least one segment".into()));
        }
        let n = phases.len() as f64;
        Self::new(phases, total_duration / n, omega)
    }

    pub fn constant(phi: f64, segments: usize, total_duration: f64, omega: f64) -> Result<Self> {
        Self::with_total_duration(vec![phi; segments], total_duration, omega)
    }

    pub fn segments(&self) -> usize {
        self.phases.len()
    }

    pub fn total_duration(&self) -> f64 {
        self.phases.len() as f64 * self.segment_duration
    }

    /// `(u_x, u_y)` per segment; always on the circle of radius `Ω`.
    pub fn controls(&self) -> Vec<(f64, f64)> {
        self.phases
            .iter()
            .map(|&phi| {
                let (s, c) = phi.sin_cos();
                (self.omega * c, self.omega * s)
            })
            .collect()
    }
}

/// Phase-independent part of the segment propagator for a fixed step length.
#[derive(Debug, Clone)]
pub struct StepKernel {
    pub order: RobustnessOrder,
    pub dt: f64,
    pub omega: f64,
    /// `C(Δt)`, a `(n1+1)(n2+1)` square block matrix.
    pub c_mat: ComplexMatrix,
    /// `S(Δt)`.
    pub s_mat: ComplexMatrix,
    pub k1: ComplexMatrix,
    pub k2: ComplexMatrix,
    // Real row-major copies used by the block fast path:
    // c = C, p = Δt·S·K1, q = Δt·Ω·S·K2.
    c: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
    blocks: usize,
    /// Number of terms used by the C/S series.
    pub series_terms: usize,
}

fn real_matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

fn frob(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn build_step_kernel(gen: &AugmentedGenerator, dt: f64) -> Result<StepKernel> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidDuration(dt));
    }
    let n = gen.order.block_count();
    let m = gen.squared_block().real_parts();
    let x = -dt * dt / 4.0;
    let m_norm = frob(&m);

    let mut identity = vec![0.0; n * n];
    for i in 0..n {
        identity[i * n + i] = 1.0;
    }
    // power = x^m M^m / (2m)!
    let mut power = identity;
    let mut c = vec![0.0; n * n];
    let mut s = vec![0.0; n * n];
    let mut terms = 0;
    for k in 0..MAX_SERIES_TERMS {
        let odd = 1.0 / (2 * k + 1) as f64;
        let mut delta = 0.0f64;
        for ((ci, si), &pi) in c.iter_mut().zip(s.iter_mut()).zip(&power) {
            *ci += pi;
            *si += pi * odd;
            delta = delta.max(pi.abs());
        }
        terms = k + 1;
        // Factorial decay dominates once the ratio bound drops below 1/2.
        let ratio = x.abs() * m_norm / ((2 * k + 1) * (2 * k + 2)) as f64;
        let scale = frob(&c).max(frob(&s)).max(1.0);
        if ratio < 0.5 && delta <= 1e-18 * scale {
            break;
        }
        if k + 1 == MAX_SERIES_TERMS {
            return Err(Error::SeriesDivergence(MAX_SERIES_TERMS));
        }
        let next = real_matmul(&power, &m, n);
        let f = x / ((2 * k + 1) * (2 * k + 2)) as f64;
        power = next.into_iter().map(|v| v * f).collect();
    }

    let k1 = gen.k1.real_parts();
    let k2 = gen.k2.real_parts();
    let p: Vec<f64> = real_matmul(&s, &k1, n).into_iter().map(|v| v * dt).collect();
    let q: Vec<f64> = real_matmul(&s, &k2, n).into_iter().map(|v| v * dt * gen.omega).collect();

    Ok(StepKernel {
        order: gen.order,
        dt,
        omega: gen.omega,
        c_mat: ComplexMatrix::from_real(n, n, &c)?,
        s_mat: ComplexMatrix::from_real(n, n, &s)?,
        k1: gen.k1.clone(),
        k2: gen.k2.clone(),
        c,
        p,
        q,
        blocks: n,
        series_terms: terms,
    })
}

/// Dense segment propagator `V(φ)` of size `N x N`.
pub fn step(kernel: &StepKernel, phi: f64) -> ComplexMatrix {
    let paulis = pauli_set();
    let (sn, cs) = phi.sin_cos();
    let rot = &paulis.sx.scale_real(kernel.omega * cs) + &paulis.sy.scale_real(kernel.omega * sn);
    let sk1 = &kernel.s_mat * &kernel.k1;
    let sk2 = &kernel.s_mat * &kernel.k2;
    let mut gen = kron(&sk1, &paulis.sz);
    gen += &kron(&sk2, &rot);
    let mut v = kron(&kernel.c_mat, &ComplexMatrix::identity(2));
    v += &gen.scale(Complex64::new(0.0, -kernel.dt));
    v
}

/// Exact `∂V/∂φ = −iΔt S K2 ⊗ Ω(−sinφ σx + cosφ σy)`.
pub fn step_gradient(kernel: &StepKernel, phi: f64) -> ComplexMatrix {
    let paulis = pauli_set();
    let (sn, cs) = phi.sin_cos();
    let drot = &paulis.sx.scale_real(-kernel.omega * sn) + &paulis.sy.scale_real(kernel.omega * cs);
    let sk2 = &kernel.s_mat * &kernel.k2;
    kron(&sk2, &drot).scale(Complex64::new(0.0, -kernel.dt))
}

fn check_compatible(gen: &AugmentedGenerator, pulse: &ControlPulse) -> Result<()> {
    if (gen.omega - pulse.omega).abs() > 1e-12 * gen.omega.abs().max(1.0) {
        return Err(Error::OmegaMismatch { generator: gen.omega, pulse: pulse.omega });
    }
    Ok(())
}

/// Ordered product `V_N ⋯ V_1` (segment 1 acts first).
pub fn propagate(gen: &AugmentedGenerator, pulse: &ControlPulse) -> Result<ComplexMatrix> {
    Ok(propagate_partials(gen, pulse)?.pop().expect("identity is always present"))
}

/// Forward partial products `[I, V_1, V_2V_1, …, V_N⋯V_1]`.
pub fn propagate_partials(gen: &AugmentedGenerator, pulse: &ControlPulse) -> Result<Vec<ComplexMatrix>> {
    check_compatible(gen, pulse)?;
    let mut out = Vec::with_capacity(pulse.segments() + 1);
    out.push(ComplexMatrix::identity(gen.dim()));
    if pulse.phases.is_empty() {
        return Ok(out);
    }
    let kernel = build_step_kernel(gen, pulse.segment_duration)?;
    for &phi in &pulse.phases {
        let next = &step(&kernel, phi) * out.last().unwrap();
        out.push(next);
    }
    Ok(out)
}

/// Final expansion blocks `U_{k1,k2}(T)` in stacking order, from `U(0) = I`.
pub fn propagate_blocks(gen: &AugmentedGenerator, pulse: &ControlPulse) -> Result<Vec<ComplexMatrix>> {
    check_compatible(gen, pulse)?;
    let n = gen.order.block_count();
    let mut state = vec![ZERO_BLOCK; n];
    state[0] = IDENTITY_BLOCK;
    if !pulse.phases.is_empty() {
        let kernel = build_step_kernel(gen, pulse.segment_duration)?;
        let mut scratch = Scratch::new(n);
        let mut next = vec![ZERO_BLOCK; n];
        for &phi in &pulse.phases {
            kernel.apply(phi, &state, &mut next, &mut scratch);
            std::mem::swap(&mut state, &mut next);
        }
    }
    Ok(state.iter().map(block_to_matrix).collect())
}

/// Reusable buffers for the block fast path.
#[derive(Debug, Clone)]
pub(crate) struct Scratch {
    zz: Vec<Block>,
    zr: Vec<Block>,
}

impl Scratch {
    pub(crate) fn new(blocks: usize) -> Self {
        Self { zz: vec![ZERO_BLOCK; blocks], zr: vec![ZERO_BLOCK; blocks] }
    }
}

#[inline]
fn madd(acc: &mut Block, s: f64, x: &Block) {
    for (a, v) in acc.iter_mut().zip(x) {
        *a += v * s;
    }
}

/// `−iσz x` and `−iR(φ) x` with `R = cosφ σx + sinφ σy = ½[[0, e^{iφ}], [e^{−iφ}, 0]]`.
#[inline]
fn rotate_terms(x: &Block, half_phase: Complex64) -> (Block, Block) {
    let mi_half = Complex64::new(0.0, -0.5);
    let i_half = Complex64::new(0.0, 0.5);
    let zz = [x[0] * mi_half, x[1] * mi_half, x[2] * i_half, x[3] * i_half];
    // −i · ½e^{iφ} and −i · ½e^{−iφ}
    let up = Complex64::new(half_phase.im, -half_phase.re);
    let down = Complex64::new(-half_phase.im, -half_phase.re);
    let zr = [x[2] * up, x[3] * up, x[0] * down, x[1] * down];
    (zz, zr)
}

impl StepKernel {
    pub fn blocks(&self) -> usize {
        self.blocks
    }

    /// `out = V(φ) x` on the stacked block state.
    pub(crate) fn apply(&self, phi: f64, x: &[Block], out: &mut [Block], scratch: &mut Scratch) {
        let n = self.blocks;
        let half_phase = Complex64::from_polar(0.5, phi);
        for c in 0..n {
            let (zz, zr) = rotate_terms(&x[c], half_phase);
            scratch.zz[c] = zz;
            scratch.zr[c] = zr;
        }
        // All coefficient matrices are lower triangular in the stacking order.
        for b in 0..n {
            let mut acc = ZERO_BLOCK;
            for c in 0..=b {
                let idx = b * n + c;
                let (cc, pp, qq) = (self.c[idx], self.p[idx], self.q[idx]);
                if cc != 0.0 {
                    madd(&mut acc, cc, &x[c]);
                }
                if pp != 0.0 {
                    madd(&mut acc, pp, &scratch.zz[c]);
                }
                if qq != 0.0 {
                    madd(&mut acc, qq, &scratch.zr[c]);
                }
            }
            out[b] = acc;
        }
    }

    /// `out = V(φ)† x`.
    pub(crate) fn apply_adjoint(&self, phi: f64, x: &[Block], out: &mut [Block], scratch: &mut Scratch) {
        let n = self.blocks;
        let half_phase = Complex64::from_polar(0.5, phi);
        for b in 0..n {
            let (zz, zr) = rotate_terms(&x[b], half_phase);
            scratch.zz[b] = zz;
            scratch.zr[b] = zr;
        }
        for c in 0..n {
            let mut acc = ZERO_BLOCK;
            for b in c..n {
                let idx = b * n + c;
                let (cc, pp, qq) = (self.c[idx], self.p[idx], self.q[idx]);
                if cc != 0.0 {
                    madd(&mut acc, cc, &x[b]);
                }
                if pp != 0.0 {
                    madd(&mut acc, -pp, &scratch.zz[b]);
                }
                if qq != 0.0 {
                    madd(&mut acc, -qq, &scratch.zr[b]);
                }
            }
            out[c] = acc;
        }
    }

    /// `2 Re ⟨λ, (∂V/∂φ) x⟩` with the Frobenius inner product over all blocks.
    pub(crate) fn phase_derivative(&self, phi: f64, costate: &[Block], x: &[Block], scratch: &mut Scratch) -> f64 {
        let n = self.blocks;
        let half_phase = Complex64::from_polar(0.5, phi);
        // −iR'(φ) x with R' = ½[[0, ie^{iφ}], [−ie^{−iφ}, 0]]
        for c in 0..n {
            let xc = &x[c];
            scratch.zr[c] = [
                xc[2] * half_phase,
                xc[3] * half_phase,
                -xc[0] * half_phase.conj(),
                -xc[1] * half_phase.conj(),
            ];
        }
        let mut total = 0.0;
        for b in 0..n {
            let mut acc = ZERO_BLOCK;
            for c in 0..=b {
                let qq = self.q[b * n + c];
                if qq != 0.0 {
                    madd(&mut acc, qq, &scratch.zr[c]);
                }
            }
            total += costate[b].iter().zip(&acc).map(|(l, a)| (l.conj() * a).re).sum::<f64>();
        }
        2.0 * total
    }
}
