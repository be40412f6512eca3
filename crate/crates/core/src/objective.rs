//! Robust-control cost `J = F[U₀₀(T)] + Σ w_{k1,k2} tr[U_{k1,k2}(T)† U_{k1,k2}(T)]`
//! and its exact phase gradient.
//!
//! The sum runs over every block of the `(n1, n2)` rectangle except `(0, 0)`.
//! Weights default to 1.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{AugmentedGenerator, ComplexMatrix, RobustnessOrder};
use crate::error::{Error, Result};
use crate::propagator::{
    block_to_matrix, build_step_kernel, Block, ControlPulse, Scratch, StepKernel, IDENTITY_BLOCK, ZERO_BLOCK,
};

/// Target single-qubit gate `U_f`.
#[derive(Debug, Clone, PartialEq)]
pub struct GateTarget {
    pub name: String,
    pub matrix: ComplexMatrix,
}

impl GateTarget {
    pub fn custom(name: impl Into<String>, matrix: ComplexMatrix) -> Result<Self> {
        if (matrix.rows(), matrix.cols()) != (2, 2) {
            return Err(Error::DimensionMismatch {
                expected: "2x2 target".into(),
                actual: format!("{}x{}", matrix.rows(), matrix.cols()),
            });
        }
        let unit = &matrix.adjoint() * &matrix;
        let residual = unit.distance(&ComplexMatrix::identity(2)).unwrap();
        if residual > 1e-12 {
            return Err(Error::InvalidConfig(format!("target is not unitary (‖U†U − I‖ = {residual:e})")));
        }
        Ok(Self { name: name.into(), matrix })
    }

    fn from_entries(name: &str, entries: [Complex64; 4]) -> Self {
        Self {
            name: name.into(),
            matrix: ComplexMatrix::from_row_major(2, 2, entries.to_vec()).unwrap(),
        }
    }

    pub fn x() -> Self {
        let (o, l) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
        Self::from_entries("X", [o, l, l, o])
    }

    pub fn z() -> Self {
        let (o, l) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
        Self::from_entries("Z", [l, o, o, -l])
    }

    pub fn s() -> Self {
        let (o, l) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
        Self::from_entries("S", [l, o, o, Complex64::new(0.0, 1.0)])
    }

    pub fn h() -> Self {
        let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self::from_entries("H", [r, r, r, -r])
    }

    /// The four benchmark gates in table order.
    pub fn standard() -> [Self; 4] {
        [Self::x(), Self::z(), Self::s(), Self::h()]
    }

    /// Parses `X`, `Z`, `S`, `H` or a row-major literal
    /// `a00,a01,a10,a11` where each entry is `re` or `re+imi`/`re-imi`.
    pub fn parse(spec: &str) -> Result<Self> {
        match spec.trim().to_ascii_uppercase().as_str() {
            "X" => return Ok(Self::x()),
            "Z" => return Ok(Self::z()),
            "S" => return Ok(Self::s()),
            "H" => return Ok(Self::h()),
            _ => {}
        }
        let entries = spec
            .split(',')
            .map(|s| {
                let t = s.trim();
                Complex64::from_str(t).map_err(|_| Error::InvalidConfig(format!("bad complex entry `{t}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if entries.len() != 4 {
            return Err(Error::InvalidConfig(format!(
                "gate must be X, Z, S, H or four comma-separated entries, got `{spec}`"
            )));
        }
        Self::custom("custom", ComplexMatrix::from_row_major(2, 2, entries)?)
    }
}

impl fmt::Display for GateTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// `F[U] = 1 − |tr(U_f† U)|² / 4`.
pub fn gate_error(u: &ComplexMatrix, target: &GateTarget) -> Result<f64> {
    if (u.rows(), u.cols()) != (2, 2) {
        return Err(Error::DimensionMismatch {
            expected: "2x2".into(),
            actual: format!("{}x{}", u.rows(), u.cols()),
        });
    }
    let overlap: Complex64 = target.matrix.as_slice().iter().zip(u.as_slice()).map(|(f, x)| f.conj() * x).sum();
    Ok(1.0 - overlap.norm_sqr() / 4.0)
}

/// Breakdown of `J` for one pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub total: f64,
    pub gate_error: f64,
    /// `tr[U†U]` per block `(k1, k2) ≠ (0, 0)`, unweighted. Keys serialize as `"k1,k2"`.
    #[serde(with = "block_keys")]
    pub block_norms: BTreeMap<(usize, usize), f64>,
}

mod block_keys {
    use std::collections::BTreeMap;

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(map: &BTreeMap<(usize, usize), f64>, s: S) -> Result<S::Ok, S::Error> {
        map.iter().map(|(&(a, b), &v)| (format!("{a},{b}"), v)).collect::<BTreeMap<_, _>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<(usize, usize), f64>, D::Error> {
        BTreeMap::<String, f64>::deserialize(d)?
            .into_iter()
            .map(|(k, v)| {
                let (a, b) = k.split_once(',').ok_or_else(|| D::Error::custom(format!("bad block key '{k}'")))?;
                let parse = |x: &str| x.trim().parse::<usize>().map_err(D::Error::custom);
                Ok(((parse(a)?, parse(b)?), v))
            })
            .collect()
    }
}

/// Optional per-block weights; missing entries weigh 1.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BlockWeights(#[serde(with = "block_keys")] pub BTreeMap<(usize, usize), f64>);

impl BlockWeights {
    pub fn get(&self, k1: usize, k2: usize) -> f64 {
        self.0.get(&(k1, k2)).copied().unwrap_or(1.0)
    }
}

/// Cost and gradient evaluator for a fixed generator, step length and target.
///
/// Holds the step kernel so repeated evaluations on pulses sharing `Δt` do not
/// rebuild it.
#[derive(Debug, Clone)]
pub struct Objective {
    kernel: StepKernel,
    target: GateTarget,
    weights: Vec<f64>,
}

impl Objective {
    pub fn new(gen: &AugmentedGenerator, segment_duration: f64, target: &GateTarget) -> Result<Self> {
        Self::with_weights(gen, segment_duration, target, &BlockWeights::default())
    }

    pub fn with_weights(
        gen: &AugmentedGenerator,
        segment_duration: f64,
        target: &GateTarget,
        weights: &BlockWeights,
    ) -> Result<Self> {
        let kernel = build_step_kernel(gen, segment_duration)?;
        let order = gen.order;
        let weights = order.blocks().map(|(k1, k2)| weights.get(k1, k2)).collect();
        Ok(Self { kernel, target: target.clone(), weights })
    }

    pub fn order(&self) -> RobustnessOrder {
        self.kernel.order
    }

    pub fn kernel(&self) -> &StepKernel {
        &self.kernel
    }

    pub fn target(&self) -> &GateTarget {
        &self.target
    }

    fn forward(&self, phases: &[f64], keep_states: bool) -> (Vec<Block>, Vec<Block>) {
        let n = self.kernel.blocks();
        let mut history = Vec::new();
        let mut state = vec![ZERO_BLOCK; n];
        state[0] = IDENTITY_BLOCK;
        let mut next = vec![ZERO_BLOCK; n];
        let mut scratch = Scratch::new(n);
        if keep_states {
            history.reserve(n * (phases.len() + 1));
            history.extend_from_slice(&state);
        }
        for &phi in phases {
            self.kernel.apply(phi, &state, &mut next, &mut scratch);
            std::mem::swap(&mut state, &mut next);
            if keep_states {
                history.extend_from_slice(&state);
            }
        }
        (state, history)
    }

    fn overlap(&self, u00: &Block) -> Complex64 {
        self.target.matrix.as_slice().iter().zip(u00).map(|(f, x)| f.conj() * x).sum()
    }

    fn report(&self, state: &[Block]) -> CostReport {
        let order = self.order();
        let gate_error = 1.0 - self.overlap(&state[0]).norm_sqr() / 4.0;
        let mut block_norms = BTreeMap::new();
        let mut total = gate_error;
        for (idx, blk) in state.iter().enumerate().skip(1) {
            let v: f64 = blk.iter().map(|z| z.norm_sqr()).sum();
            total += self.weights[idx] * v;
            block_norms.insert(order.block_label(idx), v);
        }
        CostReport { total, gate_error, block_norms }
    }

    fn check(&self, pulse: &ControlPulse) -> Result<()> {
        if (pulse.omega - self.kernel.omega).abs() > 1e-12 * self.kernel.omega.max(1.0) {
            return Err(Error::OmegaMismatch { generator: self.kernel.omega, pulse: pulse.omega });
        }
        if (pulse.segment_duration - self.kernel.dt).abs() > 1e-12 * self.kernel.dt {
            return Err(Error::DimensionMismatch {
                expected: format!("segment duration {}", self.kernel.dt),
                actual: format!("{}", pulse.segment_duration),
            });
        }
        Ok(())
    }

    pub fn cost(&self, pulse: &ControlPulse) -> Result<CostReport> {
        self.check(pulse)?;
        Ok(self.cost_of_phases(&pulse.phases))
    }

    pub fn cost_of_phases(&self, phases: &[f64]) -> CostReport {
        let (state, _) = self.forward(phases, false);
        self.report(&state)
    }

    /// Weighted total only.
    pub fn value(&self, phases: &[f64]) -> f64 {
        self.cost_of_phases(phases).total
    }

    /// Total cost plus `∂J/∂φ_j` written into `grad`.
    pub fn value_and_gradient(&self, phases: &[f64], grad: &mut [f64]) -> f64 {
        assert_eq!(phases.len(), grad.len());
        let n = self.kernel.blocks();
        let (state, history) = self.forward(phases, true);
        let report = self.report(&state);

        // Wirtinger derivative ∂J/∂Ū at the final time.
        let tau = self.overlap(&state[0]);
        let mut costate = vec![ZERO_BLOCK; n];
        for (l, f) in costate[0].iter_mut().zip(self.target.matrix.as_slice()) {
            *l = -tau * f / 4.0;
        }
        for idx in 1..n {
            let w = self.weights[idx];
            costate[idx] = state[idx].map(|z| z * w);
        }

        let mut prev = vec![ZERO_BLOCK; n];
        let mut scratch = Scratch::new(n);
        for j in (0..phases.len()).rev() {
            let before = &history[j * n..(j + 1) * n];
            grad[j] = self.kernel.phase_derivative(phases[j], &costate, before, &mut scratch);
            self.kernel.apply_adjoint(phases[j], &costate, &mut prev, &mut scratch);
            std::mem::swap(&mut costate, &mut prev);
        }
        report.total
    }

    /// Final expansion blocks for the given phases.
    pub fn final_blocks(&self, phases: &[f64]) -> Vec<ComplexMatrix> {
        self.forward(phases, false).0.iter().map(block_to_matrix).collect()
    }
}

pub fn cost(gen: &AugmentedGenerator, pulse: &ControlPulse, target: &GateTarget) -> Result<CostReport> {
    if pulse.phases.is_empty() {
        // Nothing to propagate: U₀₀ = I and every higher block vanishes.
        let u = ComplexMatrix::identity(2);
        let block_norms = gen.order.blocks().skip(1).map(|b| (b, 0.0)).collect();
        let f = gate_error(&u, target)?;
        return Ok(CostReport { total: f, gate_error: f, block_norms });
    }
    check_generator(gen, pulse)?;
    Objective::new(gen, pulse.segment_duration, target)?.cost(pulse)
}

pub fn cost_gradient(gen: &AugmentedGenerator, pulse: &ControlPulse, target: &GateTarget) -> Result<Vec<f64>> {
    if pulse.phases.is_empty() {
        return Ok(Vec::new());
    }
    check_generator(gen, pulse)?;
    let obj = Objective::new(gen, pulse.segment_duration, target)?;
    let mut grad = vec![0.0; pulse.segments()];
    obj.value_and_gradient(&pulse.phases, &mut grad);
    Ok(grad)
}

fn check_generator(gen: &AugmentedGenerator, pulse: &ControlPulse) -> Result<()> {
    if (gen.omega - pulse.omega).abs() > 1e-12 * gen.omega.max(1.0) {
        return Err(Error::OmegaMismatch { generator: gen.omega, pulse: pulse.omega });
    }
    Ok(())
}
