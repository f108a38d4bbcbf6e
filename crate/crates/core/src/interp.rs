//! Interpretations: variable declarations and symbol bindings.

use crate::linalg::{
    c, is_projection, is_unitary, max_abs, CMatrix, Channel, ChannelKind, Placement, Subspace, C64,
};
use crate::terms::Op;
use crate::{Error, Result, Tolerances};
use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

/// How a predicate's subspace is given.
#[derive(Debug, Clone, PartialEq)]
pub enum PredicateDef {
    /// Span of the listed vectors.
    Span(Vec<Vec<C64>>),
    /// Column space of a matrix.
    Matrix(CMatrix),
}

/// One line of an interpretation file.
#[derive(Debug, Clone, PartialEq)]
pub enum Declaration {
    Var {
        name: String,
        dim: usize,
    },
    Unitary {
        name: String,
        signature: Vec<usize>,
        matrix: CMatrix,
        inverts: Option<String>,
    },
    Channel {
        name: String,
        signature: Vec<usize>,
        kraus: Vec<CMatrix>,
    },
    Measurement {
        name: String,
        signature: Vec<usize>,
        outcomes: Vec<(String, CMatrix)>,
    },
    Predicate {
        name: String,
        signature: Vec<usize>,
        def: PredicateDef,
    },
    Allowed {
        signature: Vec<usize>,
        symbols: Vec<Op>,
    },
}

#[derive(Debug, Clone)]
pub struct OpBinding {
    pub signature: Vec<usize>,
    pub channel: Channel,
    /// Symbol declared as this operation's inverse, if any.
    pub inverse: Option<String>,
}

#[derive(Debug, Clone)]
pub struct MeasBinding {
    pub signature: Vec<usize>,
    pub outcomes: Vec<(String, CMatrix)>,
}

impl MeasBinding {
    pub fn outcome(&self, label: &str) -> Option<&CMatrix> {
        self.outcomes.iter().find(|(l, _)| l == label).map(|(_, m)| m)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.outcomes.iter().map(|(l, _)| l.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct PredBinding {
    pub signature: Vec<usize>,
    pub subspace: Subspace,
}

/// Ordered tensor factors of the global state space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub names: Vec<String>,
    pub dims: Vec<usize>,
}

impl Layout {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }
}

/// A validated, immutable interpretation.
#[derive(Debug, Clone)]
pub struct Interpretation {
    layout: Layout,
    ops: BTreeMap<String, OpBinding>,
    measurements: BTreeMap<String, MeasBinding>,
    predicates: BTreeMap<String, PredBinding>,
    allowed: BTreeMap<Vec<usize>, Vec<Op>>,
    declarations: Vec<Declaration>,
    tol: Tolerances,
}

/// Names the surface syntax reserves for built-in operations.
pub const RESERVED: [&str; 2] = ["I", "0"];

impl Interpretation {
    pub fn build(declarations: Vec<Declaration>, tol: Tolerances) -> Result<Self> {
        let mut me = Interpretation {
            layout: Layout {
                names: Vec::new(),
                dims: Vec::new(),
            },
            ops: BTreeMap::new(),
            measurements: BTreeMap::new(),
            predicates: BTreeMap::new(),
            allowed: BTreeMap::new(),
            declarations: Vec::new(),
            tol,
        };
        for d in &declarations {
            me.declare(d)?;
        }
        let total = me.layout.total();
        if total > tol.max_dim {
            return Err(Error::DimensionCap {
                dim: total,
                cap: tol.max_dim,
            });
        }
        me.check_inverses()?;
        me.declarations = declarations;
        Ok(me)
    }

    /// A copy with extra declarations appended, validated as a whole.
    pub fn extended(&self, extra: Vec<Declaration>) -> Result<Self> {
        let mut all = self.declarations.clone();
        all.extend(extra);
        Interpretation::build(all, self.tol)
    }

    /// Same bindings, different tolerances.
    pub fn with_tolerances(&self, tol: Tolerances) -> Result<Self> {
        Interpretation::build(self.declarations.clone(), tol)
    }

    fn fresh_symbol(&self, name: &str) -> Result<()> {
        if RESERVED.contains(&name)
            || self.ops.contains_key(name)
            || self.measurements.contains_key(name)
            || self.predicates.contains_key(name)
        {
            return Err(Error::Duplicate(name.to_owned()));
        }
        Ok(())
    }

    fn check_shape(name: &str, signature: &[usize], m: &CMatrix) -> Result<()> {
        let d: usize = signature.iter().product();
        if m.shape() != (d, d) {
            return Err(Error::SignatureMismatch {
                symbol: name.to_owned(),
                expected: signature.to_vec(),
                found: vec![m.nrows(), m.ncols()],
            });
        }
        Ok(())
    }

    fn declare(&mut self, d: &Declaration) -> Result<()> {
        let tol = self.tol;
        match d {
            Declaration::Var { name, dim } => {
                if self.layout.index_of(name).is_some() {
                    return Err(Error::Duplicate(name.clone()));
                }
                if *dim == 0 {
                    return Err(Error::Other(format!("variable {name} has dimension 0")));
                }
                self.layout.names.push(name.clone());
                self.layout.dims.push(*dim);
            }
            Declaration::Unitary {
                name,
                signature,
                matrix,
                inverts,
            } => {
                self.fresh_symbol(name)?;
                Self::check_shape(name, signature, matrix)?;
                if !is_unitary(matrix, &tol) {
                    return Err(Error::NotUnitary(name.clone()));
                }
                let channel = Channel::unitary(matrix.clone(), &tol)?;
                self.ops.insert(
                    name.clone(),
                    OpBinding {
                        signature: signature.clone(),
                        channel,
                        inverse: None,
                    },
                );
                if let Some(of) = inverts {
                    let target = self.ops.get_mut(of).ok_or_else(|| Error::UnknownSymbol(of.clone()))?;
                    target.inverse = Some(name.clone());
                }
            }
            Declaration::Channel {
                name,
                signature,
                kraus,
            } => {
                self.fresh_symbol(name)?;
                for k in kraus {
                    Self::check_shape(name, signature, k)?;
                }
                let channel = Channel::new(kraus.clone(), &tol)
                    .map_err(|e| Error::InvalidChannel(format!("{name}: {e}")))?;
                self.ops.insert(
                    name.clone(),
                    OpBinding {
                        signature: signature.clone(),
                        channel,
                        inverse: None,
                    },
                );
            }
            Declaration::Measurement {
                name,
                signature,
                outcomes,
            } => {
                self.fresh_symbol(name)?;
                let dim: usize = signature.iter().product();
                let mut sum = CMatrix::zeros(dim, dim);
                for (i, (label, m)) in outcomes.iter().enumerate() {
                    Self::check_shape(name, signature, m)?;
                    if outcomes[..i].iter().any(|(l, _)| l == label) {
                        return Err(Error::Duplicate(format!("{name}.{label}")));
                    }
                    if !is_projection(m, &tol) {
                        return Err(Error::NotProjective(name.clone(), format!("outcome {label} is not a projection")));
                    }
                    for (other, n) in &outcomes[..i] {
                        if max_abs(&(m * n)) > tol.num {
                            return Err(Error::NotProjective(
                                name.clone(),
                                format!("outcomes {other} and {label} are not orthogonal"),
                            ));
                        }
                    }
                    sum += m;
                }
                if outcomes.is_empty() || max_abs(&(sum - CMatrix::identity(dim, dim))) > tol.num {
                    return Err(Error::NotProjective(name.clone(), "outcomes do not sum to the identity".into()));
                }
                self.measurements.insert(
                    name.clone(),
                    MeasBinding {
                        signature: signature.clone(),
                        outcomes: outcomes.clone(),
                    },
                );
            }
            Declaration::Predicate {
                name,
                signature,
                def,
            } => {
                self.fresh_symbol(name)?;
                let dim: usize = signature.iter().product();
                let subspace = match def {
                    PredicateDef::Span(vs) => Subspace::span_of(dim, vs, &tol).map_err(|_| {
                        Error::SignatureMismatch {
                            symbol: name.clone(),
                            expected: signature.clone(),
                            found: vs.iter().map(|v| v.len()).collect(),
                        }
                    })?,
                    PredicateDef::Matrix(m) => {
                        if m.nrows() != dim {
                            return Err(Error::SignatureMismatch {
                                symbol: name.clone(),
                                expected: signature.clone(),
                                found: vec![m.nrows()],
                            });
                        }
                        Subspace::span(m, &tol)
                    }
                };
                self.predicates.insert(
                    name.clone(),
                    PredBinding {
                        signature: signature.clone(),
                        subspace,
                    },
                );
            }
            Declaration::Allowed { signature, symbols } => {
                for op in symbols {
                    self.check_allowed(signature, op)?;
                }
                let entry = self.allowed.entry(signature.clone()).or_default();
                for op in symbols {
                    if !entry.contains(op) {
                        entry.push(op.clone());
                    }
                }
            }
        }
        Ok(())
    }

    fn check_allowed(&self, signature: &[usize], op: &Op) -> Result<()> {
        let found = match op {
            Op::Identity => return Ok(()),
            Op::Reset if signature.len() == 1 => return Ok(()),
            Op::Reset => return Err(Error::Other("reset acts on exactly one variable".into())),
            Op::Named(n) | Op::Inverse(n) => {
                let b = self.ops.get(n).ok_or_else(|| Error::UnknownSymbol(n.clone()))?;
                if matches!(op, Op::Inverse(_)) && !b.channel.is_unitary() {
                    return Err(Error::NotUnitary(n.clone()));
                }
                &b.signature
            }
            Op::Outcome { meas, outcome } => {
                let m = self
                    .measurements
                    .get(meas)
                    .ok_or_else(|| Error::UnknownSymbol(meas.clone()))?;
                if m.outcome(outcome).is_none() {
                    return Err(Error::UnknownSymbol(format!("{meas}.{outcome}")));
                }
                &m.signature
            }
        };
        if found.as_slice() != signature {
            return Err(Error::SignatureMismatch {
                symbol: op.to_string(),
                expected: signature.to_vec(),
                found: found.clone(),
            });
        }
        Ok(())
    }

    fn check_inverses(&self) -> Result<()> {
        for (name, b) in &self.ops {
            if let Some(inv) = &b.inverse {
                let ib = &self.ops[inv];
                let u = &b.channel.kraus()[0];
                let v = &ib.channel.kraus()[0];
                if ib.signature != b.signature || max_abs(&(v - u.adjoint())) > self.tol.num {
                    return Err(Error::BadInverse {
                        inverse: inv.clone(),
                        of: name.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn tol(&self) -> &Tolerances {
        &self.tol
    }

    pub fn declarations(&self) -> &[Declaration] {
        &self.declarations
    }

    /// Ordered factors of `ℋ_Var`.
    pub fn global_space(&self) -> &Layout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.total()
    }

    pub fn var_dim(&self, name: &str) -> Result<usize> {
        self.layout
            .index_of(name)
            .map(|i| self.layout.dims[i])
            .ok_or_else(|| Error::UnknownVariable(name.to_owned()))
    }

    /// Tensor positions of `vars`, rejecting repeats.
    pub fn positions(&self, vars: &[String]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(vars.len());
        for v in vars {
            let p = self
                .layout
                .index_of(v)
                .ok_or_else(|| Error::UnknownVariable(v.clone()))?;
            if out.contains(&p) {
                return Err(Error::RepeatedVariable(v.clone()));
            }
            out.push(p);
        }
        Ok(out)
    }

    pub fn dims_of(&self, vars: &[String]) -> Result<Vec<usize>> {
        vars.iter().map(|v| self.var_dim(v)).collect()
    }

    pub fn placement(&self, vars: &[String]) -> Result<Placement> {
        Placement::new(&self.layout.dims, &self.positions(vars)?)
    }

    pub fn op(&self, name: &str) -> Result<&OpBinding> {
        self.ops.get(name).ok_or_else(|| Error::UnknownSymbol(name.to_owned()))
    }

    pub fn ops(&self) -> impl Iterator<Item = (&String, &OpBinding)> {
        self.ops.iter()
    }

    pub fn measurement(&self, name: &str) -> Result<&MeasBinding> {
        self.measurements
            .get(name)
            .ok_or_else(|| Error::UnknownSymbol(name.to_owned()))
    }

    pub fn measurements(&self) -> impl Iterator<Item = (&String, &MeasBinding)> {
        self.measurements.iter()
    }

    pub fn predicate(&self, name: &str) -> Result<&PredBinding> {
        self.predicates
            .get(name)
            .ok_or_else(|| Error::UnknownSymbol(name.to_owned()))
    }

    pub fn predicates(&self) -> impl Iterator<Item = (&String, &PredBinding)> {
        self.predicates.iter()
    }

    pub fn allowed(&self) -> &BTreeMap<Vec<usize>, Vec<Op>> {
        &self.allowed
    }

    fn expect_signature(&self, symbol: &str, signature: &[usize], vars: &[String]) -> Result<()> {
        let dims = self.dims_of(vars)?;
        if dims != signature {
            return Err(Error::SignatureMismatch {
                symbol: symbol.to_owned(),
                expected: signature.to_vec(),
                found: dims,
            });
        }
        Ok(())
    }

    /// Whether `op` denotes a unitary operation.
    pub fn op_is_unitary(&self, op: &Op) -> Result<bool> {
        Ok(match op {
            Op::Identity => true,
            Op::Reset | Op::Outcome { .. } => false,
            Op::Named(n) | Op::Inverse(n) => self.op(n)?.channel.is_unitary(),
        })
    }

    /// The channel `op` denotes on `vars`, in the local space of `vars`.
    pub fn local_channel(&self, op: &Op, vars: &[String]) -> Result<Channel> {
        self.positions(vars)?;
        let dims = self.dims_of(vars)?;
        let d: usize = dims.iter().product();
        match op {
            Op::Identity => Ok(Channel::identity(d)),
            Op::Reset => {
                if vars.len() != 1 {
                    return Err(Error::SignatureMismatch {
                        symbol: "0".into(),
                        expected: vec![d],
                        found: dims,
                    });
                }
                Ok(reset_channel(d))
            }
            Op::Named(n) => {
                let b = self.op(n)?;
                self.expect_signature(n, &b.signature, vars)?;
                Ok(b.channel.clone())
            }
            Op::Inverse(n) => {
                let b = self.op(n)?;
                self.expect_signature(n, &b.signature, vars)?;
                if !b.channel.is_unitary() {
                    return Err(Error::NotUnitary(n.clone()));
                }
                Ok(Channel::trusted(
                    vec![b.channel.kraus()[0].adjoint()],
                    ChannelKind::Unitary,
                ))
            }
            Op::Outcome { meas, outcome } => {
                let m = self.measurement(meas)?;
                self.expect_signature(meas, &m.signature, vars)?;
                let p = m
                    .outcome(outcome)
                    .ok_or_else(|| Error::UnknownSymbol(format!("{meas}.{outcome}")))?;
                Ok(Channel::trusted(vec![p.clone()], ChannelKind::Projective))
            }
        }
    }

    /// `ℰ ⊗ ℐ_rest` as an explicit channel on the global space.
    pub fn embed(&self, e: &Channel, vars: &[String]) -> Result<Channel> {
        let dims = self.dims_of(vars)?;
        let d: usize = dims.iter().product();
        if e.in_dim() != d || e.out_dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: e.in_dim(),
            });
        }
        let p = self.placement(vars)?;
        let kraus = e
            .kraus()
            .iter()
            .map(|k| p.explicit(k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Channel::trusted(kraus, e.kind()))
    }

    /// `L ⊗ ℋ_rest` where `L` lives on `vars`.
    pub fn lift(&self, local: &Subspace, vars: &[String]) -> Result<Subspace> {
        self.placement(vars)?.lift_subspace(local)
    }

    /// Support of the reduced projector on `vars`.
    pub fn restrict(&self, x: &Subspace, vars: &[String]) -> Result<Subspace> {
        self.placement(vars)?.restrict_subspace(x, &self.tol)
    }

    /// Whether `x` has the form `L ⊗ ℋ_rest` with `L` on `vars`.
    pub fn is_cylinder(&self, x: &Subspace, vars: &[String]) -> Result<bool> {
        let back = self.lift(&self.restrict(x, vars)?, vars)?;
        back.equals(x, &self.tol)
    }

    /// Variables of the layout not in `vars`, in layout order.
    pub fn complement(&self, vars: &[String]) -> Vec<String> {
        self.layout
            .names
            .iter()
            .filter(|n| !vars.contains(n))
            .cloned()
            .collect()
    }
}

/// `ρ ↦ Σ_i |0⟩⟨i| ρ |i⟩⟨0|`.
pub fn reset_channel(d: usize) -> Channel {
    let kraus = (0..d)
        .map(|i| {
            let mut k = CMatrix::zeros(d, d);
            k[(0, i)] = c(1.0, 0.0);
            k
        })
        .collect();
    Channel::trusted(kraus, if d == 1 { ChannelKind::Unitary } else { ChannelKind::General })
}

/// Standard single-qubit and two-qubit gate matrices, for building test and
/// example interpretations.
pub mod gates {
    use super::*;

    pub fn matrix(rows: usize, entries: &[C64]) -> CMatrix {
        CMatrix::from_row_slice(rows, entries.len() / rows, entries)
    }

    pub fn real(rows: usize, entries: &[f64]) -> CMatrix {
        let v: Vec<C64> = entries.iter().map(|x| c(*x, 0.0)).collect();
        matrix(rows, &v)
    }

    pub fn h() -> CMatrix {
        let s = libm::sqrt(0.5);
        real(2, &[s, s, s, -s])
    }

    pub fn x() -> CMatrix {
        real(2, &[0.0, 1.0, 1.0, 0.0])
    }

    pub fn y() -> CMatrix {
        matrix(2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
    }

    pub fn z() -> CMatrix {
        real(2, &[1.0, 0.0, 0.0, -1.0])
    }

    pub fn s() -> CMatrix {
        matrix(2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)])
    }

    pub fn t() -> CMatrix {
        let r = libm::sqrt(0.5);
        matrix(2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(r, r)])
    }

    pub fn cnot() -> CMatrix {
        real(
            4,
            &[
                1.0, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 1.0, //
                0.0, 0.0, 1.0, 0.0,
            ],
        )
    }

    /// `|k⟩⟨k|` in dimension `d`.
    pub fn basis_projector(d: usize, k: usize) -> CMatrix {
        let mut m = CMatrix::zeros(d, d);
        m[(k, k)] = c(1.0, 0.0);
        m
    }

    /// Computational-basis measurement declaration with outcomes `0..d`.
    pub fn computational(name: &str, d: usize) -> Declaration {
        Declaration::Measurement {
            name: name.to_owned(),
            signature: vec![d],
            outcomes: (0..d).map(|k| (k.to_string(), basis_projector(d, k))).collect(),
        }
    }

    pub fn unitary(name: &str, signature: &[usize], matrix: CMatrix) -> Declaration {
        Declaration::Unitary {
            name: name.to_owned(),
            signature: signature.to_vec(),
            matrix,
            inverts: None,
        }
    }

    pub fn var(name: &str, dim: usize) -> Declaration {
        Declaration::Var {
            name: name.to_owned(),
            dim,
        }
    }
}
