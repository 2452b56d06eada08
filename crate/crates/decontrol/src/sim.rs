//! Exact dense circuit evaluation under a bound oracle: pure outputs, traced
//! densities, Feynman-path decompositions, the brute-force phase average, and
//! the eigenphase mixture.
//!
//! Everything here enumerates exactly — no sampling. The phase average in
//! particular is the ground-truth reference that the decontrol transform is
//! verified against.

use num_complex::Complex;
use num_traits::One;
use thiserror::Error;

use crate::circuit::{
    apply_variant, sigma, validate, Circuit, CircuitOp, OracleTarget, OracleVariant, Role,
    Violation,
};
use crate::eig::unitary_eig;
use crate::linalg::{
    apply_to_factors, is_unitary, partial_trace_pure, ComplexMatrix, ComplexVector, LinalgError,
    TensorDims,
};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid circuit: {}", format_violations(.0))]
    InvalidCircuit(Vec<Violation>),
    #[error("oracle binding has dimension {got}, circuit expects {expected}")]
    BindingDimMismatch { expected: usize, got: usize },
    #[error("expected {expected} path bits (one per controlled call), got {got}")]
    BitsLengthMismatch { expected: usize, got: usize },
    #[error("oracle matrix is not unitary within tolerance {tol}")]
    NotUnitary { tol: f64 },
    #[error("oracle phase must have unit modulus")]
    BadPhase,
    #[error("phase group order must be at least 1")]
    BadPhaseGroup,
    #[error("output is not a density matrix: {0}")]
    DensityInvariant(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// A concrete unitary plus a unit-modulus global phase, bound to a circuit's
/// abstract oracle calls at simulation time.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleBinding<T: Scalar> {
    u: ComplexMatrix<T>,
    phase: Complex<T>,
}

impl<T: Scalar> OracleBinding<T> {
    pub fn new(u: ComplexMatrix<T>, phase: Complex<T>) -> Result<Self, SimError> {
        if !is_unitary(&u, T::tol(crate::UNITARY_TOL, 1e3)) {
            return Err(SimError::NotUnitary {
                tol: crate::UNITARY_TOL,
            });
        }
        // The comparison is written so non-finite phases fail it too.
        if !((phase.norm() - T::one()).abs() <= T::tol(1e-12, 1e2)) {
            return Err(SimError::BadPhase);
        }
        Ok(Self { u, phase })
    }

    /// Binding with the default phase of `1`.
    pub fn from_unitary(u: ComplexMatrix<T>) -> Result<Self, SimError> {
        Self::new(u, Complex::one())
    }

    pub fn unitary(&self) -> &ComplexMatrix<T> {
        &self.u
    }

    pub fn phase(&self) -> Complex<T> {
        self.phase
    }

    /// The phased black box `φ·U`.
    pub fn phased(&self) -> ComplexMatrix<T> {
        self.u.scale(self.phase)
    }
}

/// The cyclic group of q-th roots of unity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseGroup {
    q: usize,
}

impl PhaseGroup {
    pub fn new(q: usize) -> Result<Self, SimError> {
        if q == 0 {
            return Err(SimError::BadPhaseGroup);
        }
        Ok(Self { q })
    }

    pub fn order(&self) -> usize {
        self.q
    }

    /// The elements `e^{2πik/q}` for `k = 0..q-1`.
    pub fn phases<T: Scalar>(&self) -> impl Iterator<Item = Complex<T>> + '_ {
        let q = T::lit(self.q as f64);
        (0..self.q).map(move |k| {
            let angle = T::lit(2.0) * T::PI() * T::lit(k as f64) / q;
            Complex::from_polar(T::one(), angle)
        })
    }
}

/// A density matrix on the registers that survive tracing.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState<T: Scalar> {
    layout: crate::circuit::RegisterLayout,
    matrix: ComplexMatrix<T>,
}

impl<T: Scalar> DensityState<T> {
    /// Wraps a matrix after checking it is Hermitian, unit-trace, and
    /// positive semidefinite within the crate tolerances.
    pub fn new(
        layout: crate::circuit::RegisterLayout,
        matrix: ComplexMatrix<T>,
    ) -> Result<Self, SimError> {
        if matrix.rows() != layout.total_dim() || !matrix.is_square() {
            return Err(SimError::DensityInvariant(format!(
                "matrix is {}x{} but the kept registers span dimension {}",
                matrix.rows(),
                matrix.cols(),
                layout.total_dim()
            )));
        }
        if !matrix.is_finite() {
            return Err(SimError::DensityInvariant("non-finite entries".into()));
        }
        let herm_tol = T::tol(1e-10, 1e4);
        if matrix.max_abs_diff(&matrix.adjoint()) > herm_tol {
            return Err(SimError::DensityInvariant("not Hermitian".into()));
        }
        let trace = matrix.trace();
        if (trace - Complex::one()).norm() > herm_tol {
            return Err(SimError::DensityInvariant(format!(
                "trace is {trace}, expected 1"
            )));
        }
        let (evals, _) = crate::eig::hermitian_eig(&matrix.hermitize())?;
        if evals.iter().any(|&e| e < -T::tol(1e-9, 1e5)) {
            return Err(SimError::DensityInvariant(
                "negative eigenvalue beyond tolerance".into(),
            ));
        }
        Ok(Self { layout, matrix })
    }

    pub fn layout(&self) -> &crate::circuit::RegisterLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    pub fn trace_distance_to(&self, other: &DensityState<T>) -> Result<T, SimError> {
        Ok(crate::linalg::trace_distance(
            &self.matrix,
            &other.matrix,
        )?)
    }
}

fn validated<T: Scalar>(c: &Circuit<T>) -> Result<(), SimError> {
    let violations = validate(c);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(SimError::InvalidCircuit(violations))
    }
}

fn check_binding<T: Scalar>(c: &Circuit<T>, u: &ComplexMatrix<T>) -> Result<(), SimError> {
    if c.oracle_call_count() > 0 {
        let expected = c.oracle_dim().expect("validated circuit has target");
        if u.rows() != expected {
            return Err(SimError::BindingDimMismatch {
                expected,
                got: u.rows(),
            });
        }
    }
    Ok(())
}

fn acting_position<T: Scalar>(c: &Circuit<T>, target: OracleTarget) -> usize {
    let role = match target {
        OracleTarget::Target => Role::Target,
        OracleTarget::Hold => Role::Hold,
        OracleTarget::HoldTranspose => Role::HoldTranspose,
    };
    let name = &c
        .layout
        .find_role(role)
        .expect("validated circuit resolves oracle targets")
        .name;
    c.layout.position(name).expect("register resolves")
}

// Index permutation for the adder: shifts the counter digit, optionally only
// where the control digit is 1.
fn apply_adder<T: Scalar>(
    state: &ComplexVector<T>,
    dims: &TensorDims,
    pos: usize,
    shift: i32,
    control_pos: Option<usize>,
) -> ComplexVector<T> {
    let strides = dims.strides();
    let d = dims.factors()[pos];
    let mut out = ComplexVector::zeros(state.dim());
    for idx in 0..state.dim() {
        let active = control_pos.is_none_or(|cp| (idx / strides[cp]) % dims.factors()[cp] == 1);
        let target_idx = if active {
            let k = (idx / strides[pos]) % d;
            let k_new = (k as i64 + shift as i64).rem_euclid(d as i64) as usize;
            idx.wrapping_add(k_new.wrapping_sub(k).wrapping_mul(strides[pos]))
        } else {
            idx
        };
        out.entries_mut()[target_idx] = state.entries()[idx];
    }
    out
}

// Index permutation for the controlled swap of two equal-dimension registers.
fn apply_cswap<T: Scalar>(
    state: &ComplexVector<T>,
    dims: &TensorDims,
    control_pos: usize,
    a_pos: usize,
    b_pos: usize,
) -> ComplexVector<T> {
    let strides = dims.strides();
    let (da, db) = (dims.factors()[a_pos], dims.factors()[b_pos]);
    debug_assert_eq!(da, db);
    let mut out = ComplexVector::zeros(state.dim());
    for idx in 0..state.dim() {
        let c_digit = (idx / strides[control_pos]) % dims.factors()[control_pos];
        let target_idx = if c_digit == 1 {
            let ka = (idx / strides[a_pos]) % da;
            let kb = (idx / strides[b_pos]) % db;
            idx.wrapping_add(kb.wrapping_sub(ka).wrapping_mul(strides[a_pos]))
                .wrapping_add(ka.wrapping_sub(kb).wrapping_mul(strides[b_pos]))
        } else {
            idx
        };
        out.entries_mut()[target_idx] = state.entries()[idx];
    }
    out
}

// How a single op acts on the state. Oracle calls are realized by the
// caller-provided closure so the same walk serves both the bound-oracle and
// Feynman-path evaluations.
fn apply_op<T: Scalar>(
    state: ComplexVector<T>,
    c: &Circuit<T>,
    op: &CircuitOp<T>,
    mut realize_oracle: impl FnMut(
        ComplexVector<T>,
        OracleVariant,
        bool,
        Option<&str>,
        OracleTarget,
    ) -> Result<ComplexVector<T>, SimError>,
) -> Result<ComplexVector<T>, SimError> {
    let dims = c.layout.dims();
    match op {
        CircuitOp::Gate { regs, matrix } => {
            let positions: Vec<usize> = regs
                .iter()
                .map(|name| c.layout.position(name).expect("validated gate register"))
                .collect();
            Ok(apply_to_factors(&state, &dims, &positions, matrix)?)
        }
        CircuitOp::Adder { reg, shift, control } => {
            let pos = c.layout.position(reg).expect("validated adder register");
            let control_pos = control
                .as_ref()
                .map(|name| c.layout.position(name).expect("validated adder control"));
            Ok(apply_adder(&state, &dims, pos, *shift, control_pos))
        }
        CircuitOp::CSwap { control, a, b } => {
            let cp = c.layout.position(control).expect("validated cswap control");
            let ap = c.layout.position(a).expect("validated cswap register");
            let bp = c.layout.position(b).expect("validated cswap register");
            Ok(apply_cswap(&state, &dims, cp, ap, bp))
        }
        CircuitOp::Oracle {
            variant,
            controlled,
            control,
            target,
        } => realize_oracle(state, *variant, *controlled, control.as_deref(), *target),
    }
}

// Applies the concrete oracle operation (φu)^⊙, controlled when flagged.
fn bound_oracle_step<T: Scalar>(
    state: ComplexVector<T>,
    c: &Circuit<T>,
    phased: &ComplexMatrix<T>,
    variant: OracleVariant,
    controlled: bool,
    control: Option<&str>,
    target: OracleTarget,
) -> Result<ComplexVector<T>, SimError> {
    let dims = c.layout.dims();
    let m = apply_variant(phased, variant);
    let pos = acting_position(c, target);
    if controlled {
        let cp = c
            .layout
            .position(control.expect("validated controlled call"))
            .expect("register resolves");
        let block = crate::gates::controlled(&m);
        Ok(apply_to_factors(&state, &dims, &[cp, pos], &block)?)
    } else {
        Ok(apply_to_factors(&state, &dims, &[pos], &m)?)
    }
}

/// Runs the circuit on `|0…0⟩` with every oracle call realized through the
/// binding, returning the full pure output state.
pub fn run_pure<T: Scalar>(
    c: &Circuit<T>,
    binding: &OracleBinding<T>,
) -> Result<ComplexVector<T>, SimError> {
    validated(c)?;
    check_binding(c, binding.unitary())?;
    let phased = binding.phased();
    let mut state = ComplexVector::basis(c.layout.total_dim(), 0);
    for op in &c.ops {
        state = apply_op(state, c, op, |s, variant, controlled, control, target| {
            bound_oracle_step(s, c, &phased, variant, controlled, control, target)
        })?;
    }
    Ok(state)
}

/// The circuit's output density matrix: the pure output projected down to the
/// non-traced registers.
pub fn output_density<T: Scalar>(
    c: &Circuit<T>,
    binding: &OracleBinding<T>,
) -> Result<DensityState<T>, SimError> {
    let psi = run_pure(c, binding)?;
    let kept = c.layout.kept_positions();
    let matrix = partial_trace_pure(&psi, &c.layout.dims(), &kept)?;
    DensityState::new(c.layout.kept_layout(), matrix)
}

/// Evaluates one Feynman path: the i-th controlled call is replaced by the
/// projector `|b_i⟩⟨b_i|` on its control tensored with the variant operation
/// when `b_i = 1` (identity when `b_i = 0`); uncontrolled calls apply the
/// plain variant operation. The result is sub-normalized by construction.
pub fn feyn_path<T: Scalar>(
    c: &Circuit<T>,
    u: &ComplexMatrix<T>,
    bits: &[u8],
) -> Result<ComplexVector<T>, SimError> {
    validated(c)?;
    check_binding(c, u)?;
    let n = c.controlled_call_count();
    if bits.len() != n {
        return Err(SimError::BitsLengthMismatch {
            expected: n,
            got: bits.len(),
        });
    }
    let dims = c.layout.dims();
    let mut state = ComplexVector::basis(c.layout.total_dim(), 0);
    let mut next_bit = 0usize;
    for op in &c.ops {
        state = apply_op(state, c, op, |s, variant, controlled, control, target| {
            let pos = acting_position(c, target);
            if !controlled {
                let m = apply_variant(u, variant);
                return Ok(apply_to_factors(&s, &dims, &[pos], &m)?);
            }
            let bit = bits[next_bit];
            next_bit += 1;
            let cp = c
                .layout
                .position(control.expect("validated controlled call"))
                .expect("register resolves");
            let mut projector = ComplexMatrix::<T>::zeros(2, 2);
            projector.set(bit as usize, bit as usize, Complex::one());
            let action = if bit == 1 {
                apply_variant(u, variant)
            } else {
                ComplexMatrix::identity(u.rows())
            };
            let block = crate::linalg::kron(&projector, &action);
            Ok(apply_to_factors(&s, &dims, &[cp, pos], &block)?)
        })?;
    }
    Ok(state)
}

/// Signs of the controlled calls, in op order.
pub fn controlled_signs<T: Scalar>(c: &Circuit<T>) -> Vec<i32> {
    c.ops
        .iter()
        .filter_map(|op| match op {
            CircuitOp::Oracle {
                variant,
                controlled: true,
                ..
            } => Some(sigma(*variant)),
            _ => None,
        })
        .collect()
}

/// Net sign picked up by the uncontrolled calls; with a phased oracle these
/// contribute only the global factor `φ^{this}` to the pure output.
pub fn uncontrolled_sign_sum<T: Scalar>(c: &Circuit<T>) -> i64 {
    c.ops
        .iter()
        .filter_map(|op| match op {
            CircuitOp::Oracle {
                variant,
                controlled: false,
                ..
            } => Some(sigma(*variant) as i64),
            _ => None,
        })
        .sum()
}

/// Sums the Feynman paths whose signed bit weight `Σ σ(⊙_i)·b_i` equals `k`.
/// Returns the zero vector when no pattern attains `k`.
pub fn feyn_weight_sum<T: Scalar>(
    c: &Circuit<T>,
    u: &ComplexMatrix<T>,
    k: i64,
) -> Result<ComplexVector<T>, SimError> {
    validated(c)?;
    let signs = controlled_signs(c);
    let n = signs.len();
    let mut acc = ComplexVector::zeros(c.layout.total_dim());
    for pattern in 0..(1u32 << n) {
        let bits: Vec<u8> = (0..n).map(|i| ((pattern >> i) & 1) as u8).collect();
        let weight: i64 = bits
            .iter()
            .zip(&signs)
            .map(|(&b, &s)| b as i64 * s as i64)
            .sum();
        if weight == k {
            acc.add_assign(&feyn_path(c, u, &bits)?);
        }
    }
    Ok(acc)
}

/// The brute-force reference: the output density averaged exactly over every
/// phase in the group, `(1/q) Σ_{φ∈C_q} ρ(φU)`.
pub fn phase_avg_output<T: Scalar>(
    c: &Circuit<T>,
    u: &ComplexMatrix<T>,
    group: &PhaseGroup,
) -> Result<DensityState<T>, SimError> {
    validated(c)?;
    let kept_layout = c.layout.kept_layout();
    let dim = kept_layout.total_dim();
    let mut acc = ComplexMatrix::zeros(dim, dim);
    for phase in group.phases::<T>() {
        let binding = OracleBinding::new(u.clone(), phase)?;
        let rho = output_density(c, &binding)?;
        acc.add_assign(rho.matrix());
    }
    let scale = Complex::new(T::one() / T::lit(group.order() as f64), T::zero());
    DensityState::new(kept_layout, acc.scale(scale))
}

/// The eigenphase mixture `(1/d) Σ_i ρ(λ_i⁻¹ U)` over the oracle's
/// eigenvalues — what the no-counter decontrol variant produces.
pub fn eigenphase_mixture<T: Scalar>(
    c: &Circuit<T>,
    u: &ComplexMatrix<T>,
) -> Result<DensityState<T>, SimError> {
    validated(c)?;
    let (evals, _) = unitary_eig(u)?;
    let kept_layout = c.layout.kept_layout();
    let dim = kept_layout.total_dim();
    let mut acc = ComplexMatrix::zeros(dim, dim);
    for lambda in &evals {
        let phase = lambda.inv();
        // Rayleigh-quotient eigenvalues sit within ~1e-14 of the unit circle;
        // renormalize so the binding's exact-modulus check cannot trip.
        let phase = phase / Complex::new(phase.norm(), T::zero());
        let binding = OracleBinding::new(u.clone(), phase)?;
        acc.add_assign(output_density(c, &binding)?.matrix());
    }
    let scale = Complex::new(T::one() / T::lit(evals.len() as f64), T::zero());
    DensityState::new(kept_layout, acc.scale(scale))
}

/// Assembles the dense matrix of an op list over the circuit's full register
/// space by applying the ops to each basis vector. A verification aid: this
/// is how gadget op lists are compared against their algebraic form.
pub fn ops_matrix<T: Scalar>(
    c: &Circuit<T>,
    binding: &OracleBinding<T>,
) -> Result<ComplexMatrix<T>, SimError> {
    validated(c)?;
    check_binding(c, binding.unitary())?;
    let dim = c.layout.total_dim();
    let phased = binding.phased();
    let mut out = ComplexMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut state = ComplexVector::basis(dim, col);
        for op in &c.ops {
            state = apply_op(state, c, op, |s, variant, controlled, control, target| {
                bound_oracle_step(s, c, &phased, variant, controlled, control, target)
            })?;
        }
        for row in 0..dim {
            out.set(row, col, state.entries()[row]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Register, RegisterLayout};
    use crate::gates;
    use crate::linalg::trace_distance;

    type C64 = Complex<f64>;

    fn hadamard_test_circuit() -> Circuit<f64> {
        // H on C; controlled-U; H on C; trace out R.
        let layout = RegisterLayout::new(
            vec![
                Register::new("C", 2, Role::Control),
                Register::new("R", 2, Role::Target),
            ],
            ["R".to_string()],
        );
        Circuit::new(
            layout,
            vec![
                CircuitOp::Gate {
                    regs: vec!["C".into()],
                    matrix: gates::hadamard(),
                },
                CircuitOp::Oracle {
                    variant: OracleVariant::U,
                    controlled: true,
                    control: Some("C".into()),
                    target: OracleTarget::Target,
                },
                CircuitOp::Gate {
                    regs: vec!["C".into()],
                    matrix: gates::hadamard(),
                },
            ],
        )
    }

    // Two controlled calls with gates in between; mixes variants.
    fn two_call_circuit() -> Circuit<f64> {
        let layout = RegisterLayout::new(
            vec![
                Register::new("C", 2, Role::Control),
                Register::new("R", 2, Role::Target),
                Register::new("S", 2, Role::Ancilla),
            ],
            ["S".to_string()],
        );
        Circuit::new(
            layout,
            vec![
                CircuitOp::Gate {
                    regs: vec!["C".into()],
                    matrix: gates::hadamard(),
                },
                CircuitOp::Gate {
                    regs: vec!["S".into(), "R".into()],
                    matrix: gates::controlled(&gates::rotation_y(0.4)),
                },
                CircuitOp::Oracle {
                    variant: OracleVariant::U,
                    controlled: true,
                    control: Some("C".into()),
                    target: OracleTarget::Target,
                },
                CircuitOp::Gate {
                    regs: vec!["C".into(), "S".into()],
                    matrix: gates::controlled(&gates::hadamard()),
                },
                CircuitOp::Oracle {
                    variant: OracleVariant::UDag,
                    controlled: true,
                    control: Some("C".into()),
                    target: OracleTarget::Target,
                },
                CircuitOp::Oracle {
                    variant: OracleVariant::UTrans,
                    controlled: false,
                    control: None,
                    target: OracleTarget::Target,
                },
            ],
        )
    }

    fn test_unitary() -> ComplexMatrix<f64> {
        gates::rotation_y::<f64>(0.9).matmul(&gates::phase_gate(0.31))
    }

    #[test]
    fn empty_circuit_returns_ground_state() {
        let layout = RegisterLayout::new(
            vec![
                Register::new("A", 2, Role::Ancilla),
                Register::new("B", 3, Role::Ancilla),
            ],
            [],
        );
        let c = Circuit::<f64>::new(layout, vec![]);
        let binding = OracleBinding::from_unitary(ComplexMatrix::identity(2)).unwrap();
        let out = run_pure(&c, &binding).unwrap();
        assert!(out.max_abs_diff(&ComplexVector::basis(6, 0)) <= 1e-15);
    }

    #[test]
    fn single_hadamard_gives_plus_state() {
        let layout = RegisterLayout::new(vec![Register::new("R", 2, Role::Target)], []);
        let c = Circuit::new(
            layout,
            vec![CircuitOp::Gate {
                regs: vec!["R".into()],
                matrix: gates::hadamard(),
            }],
        );
        let binding = OracleBinding::from_unitary(ComplexMatrix::identity(2)).unwrap();
        let out = run_pure(&c, &binding).unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        let expected = ComplexVector::new(vec![C64::new(s, 0.0), C64::new(s, 0.0)]);
        assert!(out.max_abs_diff(&expected) <= 1e-15);
    }

    #[test]
    fn hadamard_test_reads_minus_sign() {
        // With u = I and φ = −1 the control ends in |1⟩ with amplitude 1.
        let c = hadamard_test_circuit();
        let binding =
            OracleBinding::new(ComplexMatrix::identity(2), C64::new(-1.0, 0.0)).unwrap();
        let out = run_pure(&c, &binding).unwrap();
        // Layout order (C, R): |1⟩_C |0⟩_R sits at index 2.
        assert!((out.entries()[2].norm() - 1.0).abs() <= 1e-12);
        assert!((out.norm() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn output_density_with_empty_traced_set_is_projector() {
        let mut c = hadamard_test_circuit();
        c.layout.traced.clear();
        let binding = OracleBinding::from_unitary(test_unitary()).unwrap();
        let psi = run_pure(&c, &binding).unwrap();
        let rho = output_density(&c, &binding).unwrap();
        assert!(rho.matrix().max_abs_diff(&psi.outer(&psi)) <= 1e-12);
    }

    #[test]
    fn output_density_of_product_state_keeps_pure_factor() {
        // X on C, nothing on R: tracing R leaves the pure |1⟩⟨1| on C.
        let layout = RegisterLayout::new(
            vec![
                Register::new("C", 2, Role::Control),
                Register::new("R", 3, Role::Ancilla),
            ],
            ["R".to_string()],
        );
        let c = Circuit::new(
            layout,
            vec![CircuitOp::Gate {
                regs: vec!["C".into()],
                matrix: gates::pauli_x(),
            }],
        );
        let binding = OracleBinding::from_unitary(ComplexMatrix::identity(3)).unwrap();
        let rho = output_density(&c, &binding).unwrap();
        let expected = ComplexMatrix::diagonal(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        assert!(rho.matrix().max_abs_diff(&expected) <= 1e-12);
    }

    #[test]
    fn hadamard_test_density_matches_closed_form() {
        // For u = I, φ = e^{iθ} the control ends in ((1+φ)|0⟩ + (1−φ)|1⟩)/2,
        // so its density has diagonal (1±cosθ)/2 and coherence i·sinθ/2.
        let c = hadamard_test_circuit();
        let theta = 0.7f64;
        let binding =
            OracleBinding::new(ComplexMatrix::identity(2), C64::from_polar(1.0, theta)).unwrap();
        let rho = output_density(&c, &binding).unwrap();
        let mut expected = ComplexMatrix::zeros(2, 2);
        expected.set(0, 0, C64::new((1.0 + theta.cos()) / 2.0, 0.0));
        expected.set(1, 1, C64::new((1.0 - theta.cos()) / 2.0, 0.0));
        expected.set(0, 1, C64::new(0.0, theta.sin() / 2.0));
        expected.set(1, 0, C64::new(0.0, -theta.sin() / 2.0));
        assert!(rho.matrix().max_abs_diff(&expected) <= 1e-12);
    }

    #[test]
    fn feyn_path_with_no_controlled_calls_is_phase_one_run() {
        let layout = RegisterLayout::new(
            vec![
                Register::new("C", 2, Role::Control),
                Register::new("R", 2, Role::Target),
            ],
            [],
        );
        let c = Circuit::new(
            layout,
            vec![CircuitOp::Oracle {
                variant: OracleVariant::U,
                controlled: false,
                control: None,
                target: OracleTarget::Target,
            }],
        );
        let u = test_unitary();
        let path = feyn_path(&c, &u, &[]).unwrap();
        let run = run_pure(&c, &OracleBinding::from_unitary(u).unwrap()).unwrap();
        assert!(path.max_abs_diff(&run) <= 1e-14);
    }

    #[test]
    fn feyn_all_zero_bits_is_subnormalized() {
        let c = two_call_circuit();
        let path = feyn_path(&c, &test_unitary(), &[0, 0]).unwrap();
        assert!(path.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn feyn_bits_length_checked() {
        let c = two_call_circuit();
        assert!(matches!(
            feyn_path(&c, &test_unitary(), &[0]),
            Err(SimError::BitsLengthMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn path_sum_reconstructs_output() {
        // Σ_bits φ^{Σσ·b} |feyn(bits)⟩, times the uncontrolled calls' global
        // phase, equals the bound run for every unit φ.
        let c = two_call_circuit();
        let u = test_unitary();
        let signs = controlled_signs(&c);
        for angle in [0.0, 1.1, 2.9, 4.4] {
            let phi = C64::from_polar(1.0, angle);
            let mut sum = ComplexVector::zeros(c.layout.total_dim());
            for pattern in 0..4u32 {
                let bits = [(pattern & 1) as u8, ((pattern >> 1) & 1) as u8];
                let weight: i64 = bits
                    .iter()
                    .zip(&signs)
                    .map(|(&b, &s)| b as i64 * s as i64)
                    .sum();
                let path = feyn_path(&c, &u, &bits).unwrap();
                sum.add_assign(&path.scale(phi.powi(weight as i32)));
            }
            sum = sum.scale(phi.powi(uncontrolled_sign_sum(&c) as i32));
            let run = run_pure(&c, &OracleBinding::new(u.clone(), phi).unwrap()).unwrap();
            assert!(sum.max_abs_diff(&run) <= 1e-10);
        }
    }

    #[test]
    fn weight_sum_enumerates_single_call() {
        let c = hadamard_test_circuit();
        let u = test_unitary();
        let w0 = feyn_weight_sum(&c, &u, 0).unwrap();
        let w1 = feyn_weight_sum(&c, &u, 1).unwrap();
        assert!(w0.max_abs_diff(&feyn_path(&c, &u, &[0]).unwrap()) <= 1e-14);
        assert!(w1.max_abs_diff(&feyn_path(&c, &u, &[1]).unwrap()) <= 1e-14);
    }

    #[test]
    fn weight_sum_unattainable_weight_is_zero() {
        let c = hadamard_test_circuit();
        let w = feyn_weight_sum(&c, &test_unitary(), 2).unwrap();
        assert!(w.norm() <= 1e-15);
    }

    #[test]
    fn weight_sums_total_to_phase_one_run() {
        let c = two_call_circuit();
        let u = test_unitary();
        let mut sum = ComplexVector::zeros(c.layout.total_dim());
        for k in -2..=2 {
            sum.add_assign(&feyn_weight_sum(&c, &u, k).unwrap());
        }
        let run = run_pure(&c, &OracleBinding::from_unitary(u).unwrap()).unwrap();
        assert!(sum.max_abs_diff(&run) <= 1e-12);
    }

    #[test]
    fn phase_average_trivial_for_uncontrolled_circuits() {
        // All calls uncontrolled: φ is a global phase, so every q agrees.
        let layout = RegisterLayout::new(
            vec![
                Register::new("R", 2, Role::Target),
                Register::new("S", 2, Role::Ancilla),
            ],
            ["S".to_string()],
        );
        let c = Circuit::new(
            layout,
            vec![
                CircuitOp::Gate {
                    regs: vec!["R".into()],
                    matrix: gates::hadamard(),
                },
                CircuitOp::Oracle {
                    variant: OracleVariant::UDag,
                    controlled: false,
                    control: None,
                    target: OracleTarget::Target,
                },
            ],
        );
        let u = test_unitary();
        let reference = output_density(&c, &OracleBinding::from_unitary(u.clone()).unwrap())
            .unwrap();
        for q in [1, 2, 5] {
            let avg = phase_avg_output(&c, &u, &PhaseGroup::new(q).unwrap()).unwrap();
            assert!(avg.trace_distance_to(&reference).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn hadamard_test_phase_average_is_maximally_mixed() {
        let c = hadamard_test_circuit();
        let avg = phase_avg_output(
            &c,
            &ComplexMatrix::identity(2),
            &PhaseGroup::new(2).unwrap(),
        )
        .unwrap();
        let half = ComplexMatrix::identity(2).scale(C64::new(0.5, 0.0));
        assert!(avg.matrix().max_abs_diff(&half) <= 1e-12);
    }

    #[test]
    fn phase_average_is_q_independent_beyond_call_count() {
        let c = two_call_circuit();
        let u = test_unitary();
        let a = phase_avg_output(&c, &u, &PhaseGroup::new(3).unwrap()).unwrap();
        let b = phase_avg_output(&c, &u, &PhaseGroup::new(9).unwrap()).unwrap();
        assert!(a.trace_distance_to(&b).unwrap() <= 1e-10);
    }

    #[test]
    fn eigenphase_mixture_identity_oracle() {
        let c = hadamard_test_circuit();
        let u = ComplexMatrix::identity(2);
        let mix = eigenphase_mixture(&c, &u).unwrap();
        let plain = output_density(&c, &OracleBinding::from_unitary(u).unwrap()).unwrap();
        assert!(mix.trace_distance_to(&plain).unwrap() <= 1e-12);
    }

    #[test]
    fn eigenphase_mixture_pauli_z() {
        // Eigenvalues ±1: the mixture is the average of ρ(Z) and ρ(−Z).
        let c = hadamard_test_circuit();
        let z = gates::pauli_z::<f64>();
        let mix = eigenphase_mixture(&c, &z).unwrap();
        let plus = output_density(&c, &OracleBinding::from_unitary(z.clone()).unwrap()).unwrap();
        let minus = output_density(
            &c,
            &OracleBinding::new(z.clone(), C64::new(-1.0, 0.0)).unwrap(),
        )
        .unwrap();
        let avg = plus
            .matrix()
            .add(minus.matrix())
            .scale(C64::new(0.5, 0.0));
        assert!(mix.matrix().max_abs_diff(&avg) <= 1e-12);
    }

    #[test]
    fn eigenphase_mixture_ignores_eigenvalue_order() {
        // The mixture depends only on the eigenvalue multiset, so computing
        // it from an explicitly permuted diagonal changes nothing.
        let c = hadamard_test_circuit();
        let u = ComplexMatrix::diagonal(&[C64::from_polar(1.0, 0.8), C64::from_polar(1.0, -2.1)]);
        let perm = ComplexMatrix::diagonal(&[C64::from_polar(1.0, -2.1), C64::from_polar(1.0, 0.8)]);
        let a = eigenphase_mixture(&c, &u).unwrap();
        let b = eigenphase_mixture(&c, &perm).unwrap();
        // Same multiset but different matrices: compare through the defining
        // average instead.
        let direct = |m: &ComplexMatrix<f64>| {
            let (evals, _) = unitary_eig(m).unwrap();
            let mut acc = ComplexMatrix::zeros(2, 2);
            for l in evals {
                let p = l.inv() / C64::new(l.inv().norm(), 0.0);
                acc.add_assign(
                    output_density(&c, &OracleBinding::new(m.clone(), p).unwrap())
                        .unwrap()
                        .matrix(),
                );
            }
            acc.scale(C64::new(0.5, 0.0))
        };
        assert!(a.matrix().max_abs_diff(&direct(&u)) <= 1e-11);
        assert!(b.matrix().max_abs_diff(&direct(&perm)) <= 1e-11);
    }

    #[test]
    fn binding_dimension_mismatch_is_reported() {
        let c = hadamard_test_circuit();
        let binding = OracleBinding::from_unitary(ComplexMatrix::identity(3)).unwrap();
        assert!(matches!(
            run_pure(&c, &binding),
            Err(SimError::BindingDimMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn invalid_circuit_is_rejected() {
        let mut c = hadamard_test_circuit();
        c.ops.push(CircuitOp::Gate {
            regs: vec!["C".into()],
            matrix: ComplexMatrix::identity(3),
        });
        let binding = OracleBinding::from_unitary(ComplexMatrix::identity(2)).unwrap();
        assert!(matches!(
            run_pure(&c, &binding),
            Err(SimError::InvalidCircuit(_))
        ));
    }

    #[test]
    fn binding_rejects_non_unitary_and_bad_phase() {
        let m = ComplexMatrix::diagonal(&[C64::new(1.0, 0.0), C64::new(2.0, 0.0)]);
        assert!(matches!(
            OracleBinding::from_unitary(m),
            Err(SimError::NotUnitary { .. })
        ));
        assert!(matches!(
            OracleBinding::new(ComplexMatrix::identity(2), C64::new(0.5, 0.0)),
            Err(SimError::BadPhase)
        ));
        assert!(matches!(
            OracleBinding::new(ComplexMatrix::identity(2), C64::new(f64::NAN, 0.0)),
            Err(SimError::BadPhase)
        ));
    }

    #[test]
    fn density_state_checks_invariants() {
        let layout = RegisterLayout::new(vec![Register::new("C", 2, Role::Control)], []);
        let not_trace_one = ComplexMatrix::<f64>::identity(2);
        assert!(matches!(
            DensityState::new(layout.clone(), not_trace_one),
            Err(SimError::DensityInvariant(_))
        ));
        let not_psd =
            ComplexMatrix::diagonal(&[C64::new(1.5, 0.0), C64::new(-0.5, 0.0)]);
        assert!(matches!(
            DensityState::new(layout.clone(), not_psd),
            Err(SimError::DensityInvariant(_))
        ));
        let fine = ComplexMatrix::diagonal(&[C64::new(0.25, 0.0), C64::new(0.75, 0.0)]);
        assert!(DensityState::new(layout, fine).is_ok());
    }

    #[test]
    fn densities_stay_physical_for_every_phase() {
        let c = two_call_circuit();
        let u = test_unitary();
        for angle in [0.3, 1.7, 3.3, 5.2] {
            let binding = OracleBinding::new(u.clone(), C64::from_polar(1.0, angle)).unwrap();
            // DensityState::new would have errored on any invariant breach.
            let rho = output_density(&c, &binding).unwrap();
            assert!((rho.matrix().trace().re - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn output_density_agrees_with_projector_partial_trace() {
        let c = two_call_circuit();
        let binding = OracleBinding::from_unitary(test_unitary()).unwrap();
        let psi = run_pure(&c, &binding).unwrap();
        let via_projector = crate::linalg::partial_trace(
            &psi.outer(&psi),
            &c.layout.dims(),
            &c.layout.kept_positions(),
        )
        .unwrap();
        let direct = output_density(&c, &binding).unwrap();
        assert!(trace_distance(direct.matrix(), &via_projector).unwrap() <= 1e-12);
    }
}
