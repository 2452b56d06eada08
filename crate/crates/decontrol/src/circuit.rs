//! The circuit data model: named qudit registers with roles, an ordered op
//! list of fixed gates, abstract oracle calls, adders, and controlled-SWAPs,
//! plus structural validation.
//!
//! Oracle calls carry no matrix; a concrete unitary binds only at simulation
//! time, so a transform over the circuit stays oblivious to the black box.

use std::collections::BTreeSet;

use num_complex::Complex;

use crate::linalg::{ComplexMatrix, TensorDims};
use crate::scalar::Scalar;

/// What a register is for. Roles drive oracle-call targeting and the
/// decontrol transform's bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Control,
    Target,
    Ancilla,
    Counter,
    Hold,
    HoldTranspose,
}

impl Role {
    pub fn label(self) -> &'static str {
        match self {
            Role::Control => "control",
            Role::Target => "target",
            Role::Ancilla => "ancilla",
            Role::Counter => "counter",
            Role::Hold => "hold",
            Role::HoldTranspose => "hold_transpose",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Register {
    pub name: String,
    pub dim: usize,
    pub role: Role,
}

impl Register {
    pub fn new(name: impl Into<String>, dim: usize, role: Role) -> Self {
        Self {
            name: name.into(),
            dim,
            role,
        }
    }
}

/// Ordered registers plus the set traced out of the final state. The first
/// register is the most significant digit of a basis index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterLayout {
    pub registers: Vec<Register>,
    pub traced: BTreeSet<String>,
}

impl RegisterLayout {
    pub fn new(registers: Vec<Register>, traced: impl IntoIterator<Item = String>) -> Self {
        Self {
            registers,
            traced: traced.into_iter().collect(),
        }
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.registers.iter().position(|r| r.name == name)
    }

    pub fn register(&self, name: &str) -> Option<&Register> {
        self.registers.iter().find(|r| r.name == name)
    }

    pub fn dims(&self) -> TensorDims {
        TensorDims::new(self.registers.iter().map(|r| r.dim).collect())
    }

    pub fn total_dim(&self) -> usize {
        self.registers.iter().map(|r| r.dim).product()
    }

    /// First register with the given role, if any.
    pub fn find_role(&self, role: Role) -> Option<&Register> {
        self.registers.iter().find(|r| r.role == role)
    }

    pub fn kept_positions(&self) -> Vec<usize> {
        self.registers
            .iter()
            .enumerate()
            .filter(|(_, r)| !self.traced.contains(&r.name))
            .map(|(i, _)| i)
            .collect()
    }

    /// Layout of the registers that survive tracing, with an empty traced set.
    pub fn kept_layout(&self) -> RegisterLayout {
        RegisterLayout {
            registers: self
                .registers
                .iter()
                .filter(|r| !self.traced.contains(&r.name))
                .cloned()
                .collect(),
            traced: BTreeSet::new(),
        }
    }
}

/// The four ways a circuit can invoke the black box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleVariant {
    U,
    UDag,
    UConj,
    UTrans,
}

impl OracleVariant {
    pub const ALL: [OracleVariant; 4] = [
        OracleVariant::U,
        OracleVariant::UDag,
        OracleVariant::UConj,
        OracleVariant::UTrans,
    ];

    pub fn label(self) -> &'static str {
        match self {
            OracleVariant::U => "U",
            OracleVariant::UDag => "U_dag",
            OracleVariant::UConj => "U_conj",
            OracleVariant::UTrans => "U_trans",
        }
    }
}

/// Which register an oracle call acts on: the circuit's target register, or
/// one of the transform-added hold registers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleTarget {
    Target,
    Hold,
    HoldTranspose,
}

impl OracleTarget {
    pub fn label(self) -> &'static str {
        match self {
            OracleTarget::Target => "target",
            OracleTarget::Hold => "hold",
            OracleTarget::HoldTranspose => "hold_transpose",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CircuitOp<T: Scalar> {
    /// Fixed unitary on a register subset, named most significant first.
    Gate {
        regs: Vec<String>,
        matrix: ComplexMatrix<T>,
    },
    /// Abstract black-box call.
    Oracle {
        variant: OracleVariant,
        controlled: bool,
        control: Option<String>,
        target: OracleTarget,
    },
    /// `|k⟩ → |k + shift mod dim⟩` on a counter register, optionally applied
    /// only when a dim-2 control register is `|1⟩`.
    Adder {
        reg: String,
        shift: i32,
        control: Option<String>,
    },
    /// Swap of two equal-dimension registers when the control is `|1⟩`.
    CSwap {
        control: String,
        a: String,
        b: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit<T: Scalar> {
    pub layout: RegisterLayout,
    pub ops: Vec<CircuitOp<T>>,
}

impl<T: Scalar> Circuit<T> {
    pub fn new(layout: RegisterLayout, ops: Vec<CircuitOp<T>>) -> Self {
        Self { layout, ops }
    }

    pub fn oracle_call_count(&self) -> usize {
        self.ops
            .iter()
            .filter(|op| matches!(op, CircuitOp::Oracle { .. }))
            .count()
    }

    pub fn controlled_call_count(&self) -> usize {
        self.ops
            .iter()
            .filter(|op| matches!(op, CircuitOp::Oracle { controlled: true, .. }))
            .count()
    }

    /// Smallest phase-group order that the phase average may use: one more
    /// than the number of controlled calls.
    pub fn default_q(&self) -> usize {
        self.controlled_call_count() + 1
    }

    /// Oracle dimension, i.e. the target register's dimension.
    pub fn oracle_dim(&self) -> Option<usize> {
        self.layout.find_role(Role::Target).map(|r| r.dim)
    }
}

/// Sign of an oracle variant: `+1` when a phase on the black box passes
/// through unchanged (`U`, `Uᵀ`), `−1` when it inverts (`U†`, `U*`).
pub fn sigma(variant: OracleVariant) -> i32 {
    match variant {
        OracleVariant::U | OracleVariant::UTrans => 1,
        OracleVariant::UDag | OracleVariant::UConj => -1,
    }
}

/// Applies the variant operation to a concrete matrix.
pub fn apply_variant<T: Scalar>(u: &ComplexMatrix<T>, variant: OracleVariant) -> ComplexMatrix<T> {
    match variant {
        OracleVariant::U => u.clone(),
        OracleVariant::UDag => u.adjoint(),
        OracleVariant::UConj => u.conj(),
        OracleVariant::UTrans => u.transpose(),
    }
}

/// Which hold-side register a variant's gadget works through.
pub fn hold_side(variant: OracleVariant) -> OracleTarget {
    match variant {
        OracleVariant::U | OracleVariant::UDag => OracleTarget::Hold,
        OracleVariant::UConj | OracleVariant::UTrans => OracleTarget::HoldTranspose,
    }
}

/// A structural problem found by [`validate`]. Layout-level problems carry no
/// op index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub op_index: Option<usize>,
    pub message: String,
}

impl Violation {
    fn layout(message: impl Into<String>) -> Self {
        Self {
            op_index: None,
            message: message.into(),
        }
    }

    fn op(index: usize, message: impl Into<String>) -> Self {
        Self {
            op_index: Some(index),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.op_index {
            Some(i) => write!(f, "op {}: {}", i, self.message),
            None => write!(f, "layout: {}", self.message),
        }
    }
}

/// Checks every structural invariant of the circuit. An empty list means the
/// circuit is valid; violations are data, not failures.
pub fn validate<T: Scalar>(c: &Circuit<T>) -> Vec<Violation> {
    let mut out = Vec::new();
    let layout = &c.layout;

    let mut seen = BTreeSet::new();
    for r in &layout.registers {
        if !seen.insert(r.name.clone()) {
            out.push(Violation::layout(format!(
                "duplicate register name \"{}\"",
                r.name
            )));
        }
        if r.dim == 0 {
            out.push(Violation::layout(format!(
                "register \"{}\" has dimension 0",
                r.name
            )));
        }
        if r.role == Role::Control && r.dim != 2 {
            out.push(Violation::layout(format!(
                "control register \"{}\" must have dimension 2, has {}",
                r.name, r.dim
            )));
        }
    }
    for name in &layout.traced {
        if layout.position(name).is_none() {
            out.push(Violation::layout(format!(
                "traced register \"{name}\" is not declared"
            )));
        }
    }
    for role in [Role::Target, Role::Hold, Role::HoldTranspose] {
        let n = layout.registers.iter().filter(|r| r.role == role).count();
        if n > 1 {
            out.push(Violation::layout(format!(
                "at most one register may have role {}",
                role.label()
            )));
        }
    }

    let has_oracle_call = c.oracle_call_count() > 0;
    let target_reg = layout.find_role(Role::Target);
    if has_oracle_call && target_reg.is_none() {
        out.push(Violation::layout(
            "oracle calls require exactly one register with role target",
        ));
    }
    let oracle_dim = target_reg.map(|r| r.dim);

    let resolve_control = |out: &mut Vec<Violation>, idx: usize, name: &str, what: &str| {
        match layout.register(name) {
            None => out.push(Violation::op(
                idx,
                format!("{what} names unknown register \"{name}\""),
            )),
            Some(r) if r.dim != 2 => out.push(Violation::op(
                idx,
                format!(
                    "{what} register \"{name}\" must have dimension 2, has {}",
                    r.dim
                ),
            )),
            Some(_) => {}
        }
    };

    for (idx, op) in c.ops.iter().enumerate() {
        match op {
            CircuitOp::Gate { regs, matrix } => {
                let mut dim_product = 1usize;
                let mut names = BTreeSet::new();
                let mut resolved = true;
                for name in regs {
                    if !names.insert(name.clone()) {
                        out.push(Violation::op(
                            idx,
                            format!("gate names register \"{name}\" twice"),
                        ));
                    }
                    match layout.register(name) {
                        Some(r) => dim_product *= r.dim,
                        None => {
                            resolved = false;
                            out.push(Violation::op(
                                idx,
                                format!("gate names unknown register \"{name}\""),
                            ));
                        }
                    }
                }
                if !matrix.is_square() {
                    out.push(Violation::op(
                        idx,
                        format!("gate matrix is {}x{}, not square", matrix.rows(), matrix.cols()),
                    ));
                } else if resolved && matrix.rows() != dim_product {
                    out.push(Violation::op(
                        idx,
                        format!(
                            "gate matrix dimension {} does not match register product {}",
                            matrix.rows(),
                            dim_product
                        ),
                    ));
                }
                if !matrix.is_finite() {
                    out.push(Violation::op(idx, "gate matrix has non-finite entries"));
                }
            }
            CircuitOp::Oracle {
                controlled,
                control,
                target,
                ..
            } => {
                match (controlled, control) {
                    (true, Some(name)) => {
                        resolve_control(&mut out, idx, name, "oracle call control")
                    }
                    (true, None) => out.push(Violation::op(
                        idx,
                        "controlled oracle call must name a control register",
                    )),
                    (false, Some(_)) => out.push(Violation::op(
                        idx,
                        "uncontrolled oracle call must not name a control register",
                    )),
                    (false, None) => {}
                }
                let acting = match target {
                    OracleTarget::Target => target_reg,
                    OracleTarget::Hold => layout.find_role(Role::Hold),
                    OracleTarget::HoldTranspose => layout.find_role(Role::HoldTranspose),
                };
                match acting {
                    None => out.push(Violation::op(
                        idx,
                        format!(
                            "oracle call targets the {} register, which does not exist",
                            target.label()
                        ),
                    )),
                    Some(r) => {
                        if let Some(d) = oracle_dim {
                            if r.dim != d {
                                out.push(Violation::op(
                                    idx,
                                    format!(
                                        "oracle call acts on \"{}\" of dimension {}, but the oracle dimension is {}",
                                        r.name, r.dim, d
                                    ),
                                ));
                            }
                        }
                    }
                }
            }
            CircuitOp::Adder { reg, shift, control } => {
                match layout.register(reg) {
                    None => out.push(Violation::op(
                        idx,
                        format!("adder names unknown register \"{reg}\""),
                    )),
                    Some(r) if r.role != Role::Counter => out.push(Violation::op(
                        idx,
                        format!("adder register \"{reg}\" must have role counter"),
                    )),
                    Some(_) => {}
                }
                if *shift != 1 && *shift != -1 {
                    out.push(Violation::op(
                        idx,
                        format!("adder shift must be +1 or -1, got {shift}"),
                    ));
                }
                if let Some(name) = control {
                    resolve_control(&mut out, idx, name, "adder control");
                }
            }
            CircuitOp::CSwap { control, a, b } => {
                resolve_control(&mut out, idx, control, "cswap control");
                let (ra, rb) = (layout.register(a), layout.register(b));
                for (name, r) in [(a, ra), (b, rb)] {
                    if r.is_none() {
                        out.push(Violation::op(
                            idx,
                            format!("cswap names unknown register \"{name}\""),
                        ));
                    }
                }
                if a == b {
                    out.push(Violation::op(idx, "cswap must name two distinct registers"));
                }
                if a == control || b == control {
                    out.push(Violation::op(
                        idx,
                        "cswap control must differ from the swapped registers",
                    ));
                }
                if let (Some(ra), Some(rb)) = (ra, rb) {
                    if ra.dim != rb.dim {
                        out.push(Violation::op(
                            idx,
                            format!(
                                "cswap registers \"{a}\" ({}) and \"{b}\" ({}) differ in dimension",
                                ra.dim, rb.dim
                            ),
                        ));
                    }
                }
            }
        }
    }
    out
}

/// The defining sign property on a concrete unit phase: `φ^⊙ = φ^{σ(⊙)}`.
pub fn variant_phase<T: Scalar>(phase: Complex<T>, variant: OracleVariant) -> Complex<T> {
    if sigma(variant) == 1 {
        phase
    } else {
        phase.conj()
    }
}
