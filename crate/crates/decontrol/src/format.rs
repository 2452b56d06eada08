//! JSON file formats for circuits and oracle bindings.
//!
//! Circuit document:
//!
//! ```json
//! { "registers": [{"name": "C", "dim": 2, "role": "control"}, ...],
//!   "traced": ["S"],
//!   "ops": [
//!     {"kind": "gate", "regs": ["C","R"], "matrix": [[[re,im], ...], ...]},
//!     {"kind": "oracle", "variant": "U", "controlled": true,
//!      "control": "C", "target": "target"},
//!     {"kind": "adder", "reg": "K", "shift": 1, "control": "C"},
//!     {"kind": "cswap", "control": "C", "a": "R", "b": "H"} ] }
//! ```
//!
//! Oracle document:
//!
//! ```json
//! { "dim": 2, "matrix": [[[re,im], ...], ...], "phase": [re, im] }
//! ```
//!
//! Matrices are row-major; complex numbers are two-element `[re, im]` arrays;
//! the adder's `"control"` key and the oracle's `"phase"` key are optional.
//! Unknown keys and unknown enum tags are rejected. Parsing then serializing
//! reproduces every floating-point value bit-exactly.

use std::collections::BTreeSet;

use num_complex::Complex;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::circuit::{
    Circuit, CircuitOp, OracleTarget, OracleVariant, Register, RegisterLayout, Role,
};
use crate::linalg::{is_unitary, ComplexMatrix};
use crate::scalar::Scalar;
use crate::sim::OracleBinding;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{context}: expected {expected}")]
    WrongType {
        context: String,
        expected: &'static str,
    },
    #[error("{context}: missing key \"{key}\"")]
    MissingKey { context: String, key: &'static str },
    #[error("{context}: unknown key \"{key}\"")]
    UnknownKey { context: String, key: String },
    #[error("{context}: unknown op kind \"{kind}\"")]
    UnknownKind { context: String, kind: String },
    #[error("{context}: unknown oracle variant \"{tag}\"")]
    UnknownVariant { context: String, tag: String },
    #[error("{context}: unknown register role \"{role}\"")]
    UnknownRole { context: String, role: String },
    #[error("{context}: unknown oracle target \"{target}\"")]
    UnknownTarget { context: String, target: String },
    #[error("duplicate register name \"{name}\"")]
    DuplicateRegister { name: String },
    #[error("{context}: complex numbers must be finite two-element [re, im] arrays")]
    MalformedComplex { context: String },
    #[error("{context}: matrix rows must all have length {expected}")]
    RaggedMatrix { context: String, expected: usize },
    #[error("{context}: {message}")]
    BadValue { context: String, message: String },
    #[error("oracle matrix is not unitary within tolerance {tol}")]
    OracleNotUnitary { tol: f64 },
}

type Result<V> = std::result::Result<V, FormatError>;

// ---- strict object access -------------------------------------------------

struct Obj<'a> {
    context: String,
    map: &'a Map<String, Value>,
    allowed: &'static [&'static str],
}

impl<'a> Obj<'a> {
    fn new(value: &'a Value, context: String, allowed: &'static [&'static str]) -> Result<Self> {
        let map = value.as_object().ok_or_else(|| FormatError::WrongType {
            context: context.clone(),
            expected: "a JSON object",
        })?;
        for key in map.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(FormatError::UnknownKey {
                    context: context.clone(),
                    key: key.clone(),
                });
            }
        }
        Ok(Self {
            context,
            map,
            allowed,
        })
    }

    fn required(&self, key: &'static str) -> Result<&'a Value> {
        debug_assert!(self.allowed.contains(&key));
        self.map.get(key).ok_or_else(|| FormatError::MissingKey {
            context: self.context.clone(),
            key,
        })
    }

    fn optional(&self, key: &'static str) -> Option<&'a Value> {
        self.map.get(key).filter(|v| !v.is_null())
    }

    fn string(&self, key: &'static str) -> Result<String> {
        as_string(self.required(key)?, &format!("{}.{}", self.context, key))
    }

    fn wrong(&self, key: &str, expected: &'static str) -> FormatError {
        FormatError::WrongType {
            context: format!("{}.{}", self.context, key),
            expected,
        }
    }
}

fn as_string(v: &Value, context: &str) -> Result<String> {
    v.as_str()
        .map(str::to_owned)
        .ok_or_else(|| FormatError::WrongType {
            context: context.to_string(),
            expected: "a string",
        })
}

fn as_array<'a>(v: &'a Value, context: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| FormatError::WrongType {
        context: context.to_string(),
        expected: "an array",
    })
}

fn as_finite_f64(v: &Value, context: &str) -> Result<f64> {
    match v.as_f64() {
        Some(x) if x.is_finite() => Ok(x),
        _ => Err(FormatError::MalformedComplex {
            context: context.to_string(),
        }),
    }
}

fn parse_complex<T: Scalar>(v: &Value, context: &str) -> Result<Complex<T>> {
    let pair = as_array(v, context)?;
    if pair.len() != 2 {
        return Err(FormatError::MalformedComplex {
            context: context.to_string(),
        });
    }
    let re = as_finite_f64(&pair[0], context)?;
    let im = as_finite_f64(&pair[1], context)?;
    Ok(Complex::new(T::lit(re), T::lit(im)))
}

fn parse_matrix<T: Scalar>(v: &Value, context: &str) -> Result<ComplexMatrix<T>> {
    let rows = as_array(v, context)?;
    let n_rows = rows.len();
    let mut n_cols = None;
    let mut data = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let row = as_array(row, &format!("{context}[{i}]"))?;
        match n_cols {
            None => n_cols = Some(row.len()),
            Some(expected) if expected != row.len() => {
                return Err(FormatError::RaggedMatrix {
                    context: context.to_string(),
                    expected,
                })
            }
            Some(_) => {}
        }
        for (j, entry) in row.iter().enumerate() {
            data.push(parse_complex(entry, &format!("{context}[{i}][{j}]"))?);
        }
    }
    Ok(ComplexMatrix::new(n_rows, n_cols.unwrap_or(0), data))
}

fn complex_json<T: Scalar>(c: Complex<T>) -> Value {
    json!([
        c.re.to_f64().expect("finite scalar"),
        c.im.to_f64().expect("finite scalar")
    ])
}

fn matrix_json<T: Scalar>(m: &ComplexMatrix<T>) -> Value {
    let rows: Vec<Value> = (0..m.rows())
        .map(|i| Value::Array((0..m.cols()).map(|j| complex_json(m.get(i, j))).collect()))
        .collect();
    Value::Array(rows)
}

// ---- circuit documents ----------------------------------------------------

fn parse_role(s: &str, context: &str) -> Result<Role> {
    match s {
        "control" => Ok(Role::Control),
        "target" => Ok(Role::Target),
        "ancilla" => Ok(Role::Ancilla),
        "counter" => Ok(Role::Counter),
        "hold" => Ok(Role::Hold),
        "hold_transpose" => Ok(Role::HoldTranspose),
        other => Err(FormatError::UnknownRole {
            context: context.to_string(),
            role: other.to_string(),
        }),
    }
}

fn parse_variant(s: &str, context: &str) -> Result<OracleVariant> {
    match s {
        "U" => Ok(OracleVariant::U),
        "U_dag" => Ok(OracleVariant::UDag),
        "U_conj" => Ok(OracleVariant::UConj),
        "U_trans" => Ok(OracleVariant::UTrans),
        other => Err(FormatError::UnknownVariant {
            context: context.to_string(),
            tag: other.to_string(),
        }),
    }
}

fn parse_target(s: &str, context: &str) -> Result<OracleTarget> {
    match s {
        "target" => Ok(OracleTarget::Target),
        "hold" => Ok(OracleTarget::Hold),
        "hold_transpose" => Ok(OracleTarget::HoldTranspose),
        other => Err(FormatError::UnknownTarget {
            context: context.to_string(),
            target: other.to_string(),
        }),
    }
}

fn parse_op<T: Scalar>(v: &Value, idx: usize) -> Result<CircuitOp<T>> {
    let context = format!("ops[{idx}]");
    let probe = Obj::new(
        v,
        context.clone(),
        &[
            "kind", "regs", "matrix", "variant", "controlled", "control", "target", "reg",
            "shift", "a", "b",
        ],
    )?;
    let kind = probe.string("kind")?;
    match kind.as_str() {
        "gate" => {
            let obj = Obj::new(v, context.clone(), &["kind", "regs", "matrix"])?;
            let regs = as_array(obj.required("regs")?, &format!("{context}.regs"))?
                .iter()
                .enumerate()
                .map(|(i, r)| as_string(r, &format!("{context}.regs[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            let matrix = parse_matrix(obj.required("matrix")?, &format!("{context}.matrix"))?;
            Ok(CircuitOp::Gate { regs, matrix })
        }
        "oracle" => {
            let obj = Obj::new(
                v,
                context.clone(),
                &["kind", "variant", "controlled", "control", "target"],
            )?;
            let variant = parse_variant(&obj.string("variant")?, &format!("{context}.variant"))?;
            let controlled = obj
                .required("controlled")?
                .as_bool()
                .ok_or_else(|| obj.wrong("controlled", "a boolean"))?;
            let control = obj
                .optional("control")
                .map(|c| as_string(c, &format!("{context}.control")))
                .transpose()?;
            let target = parse_target(&obj.string("target")?, &format!("{context}.target"))?;
            Ok(CircuitOp::Oracle {
                variant,
                controlled,
                control,
                target,
            })
        }
        "adder" => {
            let obj = Obj::new(v, context.clone(), &["kind", "reg", "shift", "control"])?;
            let reg = obj.string("reg")?;
            let shift = obj
                .required("shift")?
                .as_i64()
                .ok_or_else(|| obj.wrong("shift", "an integer"))?;
            let shift = i32::try_from(shift).map_err(|_| FormatError::BadValue {
                context: format!("{context}.shift"),
                message: format!("shift {shift} out of range"),
            })?;
            let control = obj
                .optional("control")
                .map(|c| as_string(c, &format!("{context}.control")))
                .transpose()?;
            Ok(CircuitOp::Adder { reg, shift, control })
        }
        "cswap" => {
            let obj = Obj::new(v, context.clone(), &["kind", "control", "a", "b"])?;
            Ok(CircuitOp::CSwap {
                control: obj.string("control")?,
                a: obj.string("a")?,
                b: obj.string("b")?,
            })
        }
        other => Err(FormatError::UnknownKind {
            context,
            kind: other.to_string(),
        }),
    }
}

/// Parses a circuit document. Rejects unknown keys, unknown tags, duplicate
/// register names, and malformed complex pairs; semantic problems beyond that
/// are left to [`crate::circuit::validate`].
pub fn parse_circuit<T: Scalar>(text: &str) -> Result<Circuit<T>> {
    let root: Value = serde_json::from_str(text)?;
    let obj = Obj::new(&root, "circuit".into(), &["registers", "traced", "ops"])?;

    let mut registers = Vec::new();
    let mut names = BTreeSet::new();
    for (i, reg) in as_array(obj.required("registers")?, "circuit.registers")?
        .iter()
        .enumerate()
    {
        let context = format!("registers[{i}]");
        let reg = Obj::new(reg, context.clone(), &["name", "dim", "role"])?;
        let name = reg.string("name")?;
        let dim = reg
            .required("dim")?
            .as_u64()
            .filter(|&d| d >= 1)
            .ok_or_else(|| reg.wrong("dim", "a positive integer"))? as usize;
        let role = parse_role(&reg.string("role")?, &format!("{context}.role"))?;
        if !names.insert(name.clone()) {
            return Err(FormatError::DuplicateRegister { name });
        }
        registers.push(Register::new(name, dim, role));
    }

    let mut traced = BTreeSet::new();
    for (i, name) in as_array(obj.required("traced")?, "circuit.traced")?
        .iter()
        .enumerate()
    {
        traced.insert(as_string(name, &format!("traced[{i}]"))?);
    }

    let ops = as_array(obj.required("ops")?, "circuit.ops")?
        .iter()
        .enumerate()
        .map(|(i, op)| parse_op(op, i))
        .collect::<Result<Vec<_>>>()?;

    Ok(Circuit::new(
        RegisterLayout { registers, traced },
        ops,
    ))
}

fn op_json<T: Scalar>(op: &CircuitOp<T>) -> Value {
    match op {
        CircuitOp::Gate { regs, matrix } => json!({
            "kind": "gate",
            "regs": regs,
            "matrix": matrix_json(matrix),
        }),
        CircuitOp::Oracle {
            variant,
            controlled,
            control,
            target,
        } => {
            let mut map = Map::new();
            map.insert("kind".into(), json!("oracle"));
            map.insert("variant".into(), json!(variant.label()));
            map.insert("controlled".into(), json!(controlled));
            if let Some(c) = control {
                map.insert("control".into(), json!(c));
            }
            map.insert("target".into(), json!(target.label()));
            Value::Object(map)
        }
        CircuitOp::Adder { reg, shift, control } => {
            let mut map = Map::new();
            map.insert("kind".into(), json!("adder"));
            map.insert("reg".into(), json!(reg));
            map.insert("shift".into(), json!(shift));
            if let Some(c) = control {
                map.insert("control".into(), json!(c));
            }
            Value::Object(map)
        }
        CircuitOp::CSwap { control, a, b } => json!({
            "kind": "cswap",
            "control": control,
            "a": a,
            "b": b,
        }),
    }
}

/// Serializes a circuit to its JSON document form.
pub fn serialize_circuit<T: Scalar>(c: &Circuit<T>) -> String {
    let registers: Vec<Value> = c
        .layout
        .registers
        .iter()
        .map(|r| json!({"name": r.name, "dim": r.dim, "role": r.role.label()}))
        .collect();
    let traced: Vec<&String> = c.layout.traced.iter().collect();
    let ops: Vec<Value> = c.ops.iter().map(op_json).collect();
    let doc = json!({"registers": registers, "traced": traced, "ops": ops});
    serde_json::to_string_pretty(&doc).expect("circuit document serializes")
}

/// Serialize-then-parse; the identity on every valid circuit.
pub fn roundtrip<T: Scalar>(c: &Circuit<T>) -> Result<Circuit<T>> {
    parse_circuit(&serialize_circuit(c))
}

// ---- oracle documents -----------------------------------------------------

/// Parses an oracle document and validates unitarity at tolerance
/// [`crate::UNITARY_TOL`]. A missing `"phase"` defaults to `1`.
pub fn parse_oracle<T: Scalar>(text: &str) -> Result<OracleBinding<T>> {
    let root: Value = serde_json::from_str(text)?;
    let obj = Obj::new(&root, "oracle".into(), &["dim", "matrix", "phase"])?;
    let dim = obj
        .required("dim")?
        .as_u64()
        .filter(|&d| d >= 1)
        .ok_or_else(|| obj.wrong("dim", "a positive integer"))? as usize;
    let matrix = parse_matrix::<T>(obj.required("matrix")?, "oracle.matrix")?;
    if matrix.rows() != dim || matrix.cols() != dim {
        return Err(FormatError::BadValue {
            context: "oracle.matrix".into(),
            message: format!(
                "matrix is {}x{} but dim is {}",
                matrix.rows(),
                matrix.cols(),
                dim
            ),
        });
    }
    let phase = match obj.optional("phase") {
        Some(p) => parse_complex::<T>(p, "oracle.phase")?,
        None => Complex::new(T::one(), T::zero()),
    };
    if !is_unitary(&matrix, T::tol(crate::UNITARY_TOL, 1e3)) {
        return Err(FormatError::OracleNotUnitary {
            tol: crate::UNITARY_TOL,
        });
    }
    OracleBinding::new(matrix, phase).map_err(|e| FormatError::BadValue {
        context: "oracle".into(),
        message: e.to_string(),
    })
}

/// Serializes an oracle binding to its JSON document form.
pub fn serialize_oracle<T: Scalar>(b: &OracleBinding<T>) -> String {
    let doc = json!({
        "dim": b.unitary().rows(),
        "matrix": matrix_json(b.unitary()),
        "phase": complex_json(b.phase()),
    });
    serde_json::to_string_pretty(&doc).expect("oracle document serializes")
}
