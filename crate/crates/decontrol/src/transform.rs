//! The decontrolling transform: rewrites every controlled oracle call into a
//! gadget of controlled-SWAPs, a controlled counter shift, and one
//! uncontrolled call, so the output circuit queries the black box only
//! uncontrolled.
//!
//! Support registers are appended and traced out: a counter `K` that records
//! each path's signed number of controlled queries so that paths with
//! different counts decohere, and `d`-dimensional hold registers `H`/`HT`
//! that absorb the uncontrolled query on branches where the control is
//! `|0⟩`. With both hold registers present they start in the maximally
//! entangled state; a variant that drops one keeps the other maximally mixed
//! by entangling it with a never-touched purifier register.
//!
//! The traced output of the rewritten circuit equals the original circuit's
//! output density averaged over a uniformly random global phase on the
//! oracle, drawn from the q-th roots of unity for any q exceeding the
//! controlled-call count.

use thiserror::Error;

use crate::circuit::{
    hold_side, sigma, validate, Circuit, CircuitOp, OracleTarget, OracleVariant, Register,
    RegisterLayout, Role, Violation,
};
use crate::gates::prepare_state;
use crate::linalg::max_entangled;
use crate::scalar::Scalar;

/// Counter-register policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CounterMode {
    /// Counter of dimension n+1 for n controlled calls; the general-purpose
    /// construction.
    Full,
    /// No counter. The output becomes the oracle's eigenphase mixture
    /// instead of the uniform phase average.
    None,
    /// Counter of dimension p; valid whenever the bound oracle satisfies
    /// `u^p = I`. Unchecked here — verification happens at simulation time.
    Period(usize),
}

impl CounterMode {
    pub fn label(&self) -> String {
        match self {
            CounterMode::Full => "full".into(),
            CounterMode::None => "no-counter".into(),
            CounterMode::Period(p) => format!("period:{p}"),
        }
    }
}

/// Hold-register policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HoldMode {
    /// Both hold registers, jointly maximally entangled.
    Both,
    /// Only `H`; valid when every controlled call is `U` or `U†`.
    HOnly,
    /// Only `HT`; valid when every controlled call is `U*` or `Uᵀ`.
    HTransposeOnly,
    /// Pick the smallest valid option for the circuit at hand.
    Auto,
}

impl HoldMode {
    pub fn label(&self) -> &'static str {
        match self {
            HoldMode::Both => "both",
            HoldMode::HOnly => "h",
            HoldMode::HTransposeOnly => "ht",
            HoldMode::Auto => "auto",
        }
    }
}

/// Which construction [`decontrol`] applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecontrolVariant {
    pub counter: CounterMode,
    pub hold: HoldMode,
}

impl Default for DecontrolVariant {
    fn default() -> Self {
        Self {
            counter: CounterMode::Full,
            hold: HoldMode::Auto,
        }
    }
}

impl serde::Serialize for DecontrolVariant {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("DecontrolVariant", 2)?;
        st.serialize_field("counter", &self.counter.label())?;
        st.serialize_field("hold", self.hold.label())?;
        st.end()
    }
}

#[derive(Debug, Error)]
pub enum DecontrolError {
    #[error("invalid circuit: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidCircuit(Vec<Violation>),
    #[error("hold policy {policy} cannot serve a controlled {variant} call")]
    HoldPolicyConflict {
        policy: &'static str,
        variant: &'static str,
    },
    #[error("gadget for {variant} needs the {side} register, which the layout lacks")]
    MissingHoldRegister {
        variant: &'static str,
        side: &'static str,
    },
    #[error("gadget needs a counter register but the layout names none")]
    MissingCounterRegister,
    #[error("period counter dimension must be at least 1")]
    BadPeriod,
    #[error("input circuit already carries transform support registers (role {0})")]
    AlreadyTransformed(&'static str),
    #[error("controlled oracle calls must act on the target register to be rewritten")]
    ControlledHoldCall,
}

/// Register names a gadget needs to resolve against the rewritten layout.
#[derive(Debug, Clone)]
pub struct GadgetContext {
    pub control: String,
    pub target: String,
    pub counter: Option<String>,
    pub hold: Option<String>,
    pub hold_transpose: Option<String>,
}

/// Emits the op list replacing one controlled call: a controlled counter
/// shift by the variant's sign, then swap–apply–swap through the variant's
/// hold-side register. Bound to an oracle `u`, the list assembles to
///
/// `|0⟩⟨0|_C ⊗ I_R ⊗ (u-variant on hold side) + |1⟩⟨1|_C ⊗ u^⊙_R ⊗ Add(σ)_K`.
pub fn build_gadget<T: Scalar>(
    variant: OracleVariant,
    dv: &DecontrolVariant,
    ctx: &GadgetContext,
) -> Result<Vec<CircuitOp<T>>, DecontrolError> {
    let (side_name, side_target, side_label) = match hold_side(variant) {
        OracleTarget::Hold => (&ctx.hold, OracleTarget::Hold, "hold"),
        _ => (&ctx.hold_transpose, OracleTarget::HoldTranspose, "hold_transpose"),
    };
    let hold_reg = side_name
        .as_ref()
        .ok_or(DecontrolError::MissingHoldRegister {
            variant: variant.label(),
            side: side_label,
        })?;

    let mut ops = Vec::with_capacity(4);
    if !matches!(dv.counter, CounterMode::None) {
        let counter = ctx
            .counter
            .as_ref()
            .ok_or(DecontrolError::MissingCounterRegister)?;
        ops.push(CircuitOp::Adder {
            reg: counter.clone(),
            shift: sigma(variant),
            control: Some(ctx.control.clone()),
        });
    }
    ops.push(CircuitOp::CSwap {
        control: ctx.control.clone(),
        a: ctx.target.clone(),
        b: hold_reg.clone(),
    });
    ops.push(CircuitOp::Oracle {
        variant,
        controlled: false,
        control: None,
        target: side_target,
    });
    ops.push(CircuitOp::CSwap {
        control: ctx.control.clone(),
        a: ctx.target.clone(),
        b: hold_reg.clone(),
    });
    Ok(ops)
}

fn fresh_name(layout: &RegisterLayout, base: &str) -> String {
    if layout.position(base).is_none() {
        return base.to_string();
    }
    let mut i = 1usize;
    loop {
        let candidate = format!("{base}{i}");
        if layout.position(&candidate).is_none() {
            return candidate;
        }
        i += 1;
    }
}

// Which hold registers the policy materializes for this circuit.
fn resolve_hold<T: Scalar>(
    c: &Circuit<T>,
    hold: HoldMode,
) -> Result<(bool, bool), DecontrolError> {
    let mut needs_h = false;
    let mut needs_ht = false;
    for op in &c.ops {
        if let CircuitOp::Oracle {
            variant,
            controlled: true,
            ..
        } = op
        {
            match hold_side(*variant) {
                OracleTarget::Hold => needs_h = true,
                _ => needs_ht = true,
            }
        }
    }
    match hold {
        HoldMode::Both => Ok((true, true)),
        HoldMode::Auto => Ok((needs_h, needs_ht)),
        HoldMode::HOnly => {
            if needs_ht {
                Err(DecontrolError::HoldPolicyConflict {
                    policy: "h",
                    variant: "U_conj/U_trans",
                })
            } else {
                Ok((true, false))
            }
        }
        HoldMode::HTransposeOnly => {
            if needs_h {
                Err(DecontrolError::HoldPolicyConflict {
                    policy: "ht",
                    variant: "U/U_dag",
                })
            } else {
                Ok((false, true))
            }
        }
    }
}

/// Rewrites the circuit so that it contains no controlled oracle calls.
///
/// Gates and uncontrolled calls pass through unchanged. Support registers are
/// appended, added to the traced set, and — when a maximally entangled or
/// maximally mixed start is required — initialized by a preparation gate at
/// the head of the op list. A circuit with no controlled calls is returned
/// unchanged.
pub fn decontrol<T: Scalar>(
    c: &Circuit<T>,
    dv: &DecontrolVariant,
) -> Result<Circuit<T>, DecontrolError> {
    let violations = validate(c);
    if !violations.is_empty() {
        return Err(DecontrolError::InvalidCircuit(violations));
    }
    let n = c.controlled_call_count();
    if n == 0 {
        return Ok(c.clone());
    }
    for (role, label) in [
        (Role::Counter, "counter"),
        (Role::Hold, "hold"),
        (Role::HoldTranspose, "hold_transpose"),
    ] {
        if c.layout.find_role(role).is_some() {
            return Err(DecontrolError::AlreadyTransformed(label));
        }
    }
    for op in &c.ops {
        if let CircuitOp::Oracle {
            controlled: true,
            target,
            ..
        } = op
        {
            if *target != OracleTarget::Target {
                return Err(DecontrolError::ControlledHoldCall);
            }
        }
    }

    let d = c.oracle_dim().expect("controlled calls imply a target");
    let target_name = c
        .layout
        .find_role(Role::Target)
        .expect("validated")
        .name
        .clone();

    let counter_dim = match dv.counter {
        CounterMode::Full => Some(n + 1),
        CounterMode::Period(0) => return Err(DecontrolError::BadPeriod),
        CounterMode::Period(p) => Some(p),
        CounterMode::None => None,
    };
    let (add_h, add_ht) = resolve_hold(c, dv.hold)?;

    let mut layout = c.layout.clone();
    let counter_name = counter_dim.map(|dim| {
        let name = fresh_name(&layout, "K");
        layout.registers.push(Register::new(&name, dim, Role::Counter));
        layout.traced.insert(name.clone());
        name
    });
    let hold_name = add_h.then(|| {
        let name = fresh_name(&layout, "H");
        layout.registers.push(Register::new(&name, d, Role::Hold));
        layout.traced.insert(name.clone());
        name
    });
    let hold_t_name = add_ht.then(|| {
        let name = fresh_name(&layout, "HT");
        layout
            .registers
            .push(Register::new(&name, d, Role::HoldTranspose));
        layout.traced.insert(name.clone());
        name
    });
    // A lone hold register must start maximally mixed; purify it with a
    // register that is never acted on and traced out.
    let purifier_name = (add_h != add_ht).then(|| {
        let name = fresh_name(&layout, "HP");
        layout.registers.push(Register::new(&name, d, Role::Ancilla));
        layout.traced.insert(name.clone());
        name
    });

    let mut ops: Vec<CircuitOp<T>> = Vec::with_capacity(c.ops.len() + 3 * n + 1);
    let entangle_pair = match (&hold_name, &hold_t_name, &purifier_name) {
        (Some(h), Some(ht), _) => Some((h.clone(), ht.clone())),
        (Some(h), _, Some(p)) => Some((h.clone(), p.clone())),
        (_, Some(ht), Some(p)) => Some((ht.clone(), p.clone())),
        _ => None,
    };
    if let Some((a, b)) = entangle_pair {
        ops.push(CircuitOp::Gate {
            regs: vec![a, b],
            matrix: prepare_state(&max_entangled::<T>(d)),
        });
    }

    let ctx = GadgetContext {
        control: String::new(), // filled per call
        target: target_name,
        counter: counter_name,
        hold: hold_name,
        hold_transpose: hold_t_name,
    };
    for op in &c.ops {
        match op {
            CircuitOp::Oracle {
                variant,
                controlled: true,
                control,
                ..
            } => {
                let ctx = GadgetContext {
                    control: control.clone().expect("validated controlled call"),
                    ..ctx.clone()
                };
                ops.extend(build_gadget(*variant, dv, &ctx)?);
            }
            other => ops.push(other.clone()),
        }
    }

    Ok(Circuit::new(layout, ops))
}

/// Gadget composition of one rewritten call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct PerGadget {
    pub cswaps: usize,
    pub adders: usize,
    pub oracle_calls: usize,
}

/// Structural cost of decontrolling a circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct OverheadReport {
    /// Qubits needed for the appended registers: ⌈log₂(counter dim)⌉ plus
    /// ⌈log₂ d⌉ per hold register. A purifier backing a maximally mixed hold
    /// register is not counted — the construction's space cost is the
    /// logical hold register itself.
    pub extra_qubits: usize,
    /// Support gates added across all gadgets (the uncontrolled call replaces
    /// the controlled one and is not counted as extra).
    pub extra_gate_count: usize,
    /// Number of rewritten controlled calls.
    pub gadget_count: usize,
    pub per_gadget: PerGadget,
}

// Qubits needed to address `values` distinct states.
fn qubits_for(values: usize) -> usize {
    debug_assert!(values >= 1);
    (usize::BITS - (values - 1).leading_zeros()) as usize
}

/// Computes the structural overhead of [`decontrol`] without performing it.
pub fn overhead_report<T: Scalar>(
    c: &Circuit<T>,
    dv: &DecontrolVariant,
) -> Result<OverheadReport, DecontrolError> {
    let violations = validate(c);
    if !violations.is_empty() {
        return Err(DecontrolError::InvalidCircuit(violations));
    }
    let n = c.controlled_call_count();
    if n == 0 {
        return Ok(OverheadReport {
            extra_qubits: 0,
            extra_gate_count: 0,
            gadget_count: 0,
            per_gadget: PerGadget {
                cswaps: 0,
                adders: 0,
                oracle_calls: 0,
            },
        });
    }
    let d = c.oracle_dim().expect("controlled calls imply a target");
    let counter_qubits = match dv.counter {
        CounterMode::Full => qubits_for(n + 1),
        CounterMode::Period(0) => return Err(DecontrolError::BadPeriod),
        CounterMode::Period(p) => qubits_for(p),
        CounterMode::None => 0,
    };
    let (add_h, add_ht) = resolve_hold(c, dv.hold)?;
    let hold_count = usize::from(add_h) + usize::from(add_ht);
    let adders = usize::from(!matches!(dv.counter, CounterMode::None));
    Ok(OverheadReport {
        extra_qubits: counter_qubits + hold_count * qubits_for(d),
        extra_gate_count: n * (2 + adders),
        gadget_count: n,
        per_gadget: PerGadget {
            cswaps: 2,
            adders,
            oracle_calls: 1,
        },
    })
}
