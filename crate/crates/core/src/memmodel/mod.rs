//! Byte-addressed symbolic memory with bounds-tracked objects.
//!
//! Objects are copy-on-write, so cloning a [`SymMemory`] is cheap and forked
//! states never observe each other's writes.

mod layout;

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::frontend::{RecordDecl, Type};
use crate::solver::{mk_binary, mk_cast, mk_select, retype, BinOp, SymVar, Term, Ty};

pub use layout::{leaf_at, leaves, union_canonical, Leaf};

pub type ObjId = usize;

/// Elements behind a pointer-typed input.
pub const DEFAULT_BACKING_LEN: u32 = 4;
/// Widest symbolic index resolved by case split.
pub const MAX_INDEX_CANDIDATES: i64 = 256;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PtrTarget {
    Object(ObjId),
    /// An integer turned into a pointer.
    Fixed(Term),
    Null,
    /// A `void *` or uninitialized pointer with no known referent.
    Unbound,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointerValue {
    pub target: PtrTarget,
    /// Constant byte offset.
    pub base: i64,
    /// Symbolic element index and its stride in bytes.
    pub index: Option<(Term, u32)>,
}

impl PointerValue {
    pub fn to_object(id: ObjId) -> Self {
        PointerValue {
            target: PtrTarget::Object(id),
            base: 0,
            index: None,
        }
    }

    pub fn null() -> Self {
        PointerValue {
            target: PtrTarget::Null,
            base: 0,
            index: None,
        }
    }

    pub fn unbound() -> Self {
        PointerValue {
            target: PtrTarget::Unbound,
            base: 0,
            index: None,
        }
    }

    /// Integer-to-pointer conversion: zero is null, anything else a fixed address.
    pub fn from_int(t: Term) -> Self {
        let target = match t.as_const() {
            Some(0) => PtrTarget::Null,
            _ => PtrTarget::Fixed(retype(t, Ty::U32)),
        };
        PointerValue {
            target,
            base: 0,
            index: None,
        }
    }

    pub fn is_null(&self) -> bool {
        self.target == PtrTarget::Null
    }

    /// Byte offset as a term.
    pub fn offset_term(&self) -> Term {
        let base = Term::int(self.base as i32);
        match &self.index {
            None => base,
            Some((i, s)) => mk_binary(
                BinOp::Add,
                base,
                mk_binary(BinOp::Mul, retype(i.clone(), Ty::I32), Term::int(*s as i32)),
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Int(Term),
    Ptr(PointerValue),
}

impl Value {
    pub fn as_term(&self) -> Option<&Term> {
        match self {
            Value::Int(t) => Some(t),
            Value::Ptr(_) => None,
        }
    }

    pub fn as_ptr(&self) -> Option<&PointerValue> {
        match self {
            Value::Ptr(p) => Some(p),
            Value::Int(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Global,
    Param,
    Local,
    /// Storage behind a pointer-typed input.
    Backing,
}

/// How bytes never written are read.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Fresh {
    /// As named symbolic inputs, e.g. `s.m` or `p[0]`.
    Input(String),
    /// As fresh `__uninit_k` values.
    Uninit,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Cell {
    size: u32,
    value: Value,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MemObject {
    pub id: ObjId,
    pub name: String,
    pub ty: Type,
    pub size: u32,
    pub origin: Origin,
    fresh: Fresh,
    /// Byte ranges clobbered by stubs, newest last: (start, end, symbol prefix).
    havoc: Vec<(u32, u32, String)>,
    cells: BTreeMap<u32, Cell>,
}

impl MemObject {
    fn covering(&self, b: u32) -> Option<(u32, &Cell)> {
        self.cells
            .range(..=b)
            .next_back()
            .filter(|(s, c)| **s + c.size > b)
            .map(|(s, c)| (*s, c))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum MemError {
    #[error("access of {size} bytes at offset {offset} outside `{object}` ({total} bytes)")]
    OutOfBounds {
        object: String,
        offset: i64,
        size: u32,
        total: u32,
    },
    #[error("null pointer dereference")]
    NullDeref,
    #[error("dereference of fixed address {0}")]
    FixedAddressDeref(String),
    #[error("dereference of unresolved void pointer")]
    UnresolvedVoidAlias,
    #[error("arithmetic on null pointer")]
    NullPointerArithmetic,
    #[error("pointer bytes read as integer")]
    PointerAsInteger,
    #[error("symbolic index needs a concrete value")]
    NeedsConcreteIndex,
}

/// Whether an access can leave its object.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Bounds {
    InBounds,
    /// Out of bounds exactly when this 0/1 term holds.
    FaultWhen(Term),
    Always,
}

#[derive(Clone, Debug)]
pub struct SymMemory {
    objects: Vec<Arc<MemObject>>,
    records: Arc<[RecordDecl]>,
    next_fresh: u32,
    backing_len: u32,
    /// Named input symbols materialized so far, in first-read order.
    inputs: Vec<SymVar>,
}

impl PartialEq for SymMemory {
    fn eq(&self, other: &Self) -> bool {
        self.objects == other.objects && self.next_fresh == other.next_fresh
    }
}

impl SymMemory {
    pub fn new(records: Arc<[RecordDecl]>) -> Self {
        SymMemory {
            objects: Vec::new(),
            records,
            next_fresh: 0,
            backing_len: DEFAULT_BACKING_LEN,
            inputs: Vec::new(),
        }
    }

    pub fn with_backing_len(mut self, n: u32) -> Self {
        self.backing_len = n.max(1);
        self
    }

    pub fn records(&self) -> &[RecordDecl] {
        &self.records
    }

    pub fn alloc(&mut self, name: impl Into<String>, ty: Type, origin: Origin, fresh: Fresh) -> ObjId {
        let id = self.objects.len();
        let size = ty.size(&self.records);
        self.objects.push(Arc::new(MemObject {
            id,
            name: name.into(),
            ty,
            size,
            origin,
            fresh,
            havoc: Vec::new(),
            cells: BTreeMap::new(),
        }));
        id
    }

    pub fn inputs(&self) -> &[SymVar] {
        &self.inputs
    }

    pub fn object(&self, id: ObjId) -> &MemObject {
        &self.objects[id]
    }

    pub fn objects(&self) -> impl Iterator<Item = &MemObject> {
        self.objects.iter().map(|o| o.as_ref())
    }

    fn obj_mut(&mut self, id: ObjId) -> &mut MemObject {
        Arc::make_mut(&mut self.objects[id])
    }

    /// Offset arithmetic: `p + delta * elem_size`.
    pub fn pointer_add(&self, p: &PointerValue, delta: &Term, elem_size: u32) -> Result<PointerValue, MemError> {
        if p.is_null() {
            if delta.as_const() == Some(0) {
                return Ok(p.clone());
            }
            return Err(MemError::NullPointerArithmetic);
        }
        let mut q = p.clone();
        match delta.as_const() {
            Some(c) => {
                let d = match delta.ty() {
                    Ty::U32 => c as i64,
                    _ => c as i32 as i64,
                };
                q.base += d * elem_size as i64;
            }
            None => {
                let d = if delta.ty() == Ty::I8 { mk_cast(Ty::I32, delta.clone()) } else { delta.clone() };
                q.index = Some(match p.index.as_ref() {
                    None => (d, elem_size),
                    Some((i, s)) if *s == elem_size => (mk_binary(BinOp::Add, i.clone(), d), elem_size),
                    Some((i, s)) => (
                        mk_binary(
                            BinOp::Add,
                            mk_binary(BinOp::Mul, i.clone(), Term::int(*s as i32)),
                            mk_binary(BinOp::Mul, d, Term::int(elem_size as i32)),
                        ),
                        1,
                    ),
                });
            }
        }
        Ok(q)
    }

    fn object_of(&self, p: &PointerValue) -> Result<ObjId, MemError> {
        match &p.target {
            PtrTarget::Object(id) => Ok(*id),
            PtrTarget::Null => Err(MemError::NullDeref),
            PtrTarget::Fixed(a) => Err(MemError::FixedAddressDeref(match a.as_const() {
                Some(v) => format!("0x{:08X}", v.wrapping_add(p.base as u32)),
                None => format!("{a}"),
            })),
            PtrTarget::Unbound => Err(MemError::UnresolvedVoidAlias),
        }
    }

    /// Index range `[lo, hi]` keeping an access of `size` bytes inside the object.
    fn index_range(&self, total: u32, base: i64, stride: u32, size: u32) -> (i64, i64) {
        let s = stride.max(1) as i64;
        let lo = (-base).div_euclid(s) + i64::from((-base).rem_euclid(s) != 0);
        let hi = (total as i64 - size as i64 - base).div_euclid(s);
        (lo, hi)
    }

    /// Bounds condition of an access of `size` bytes through `p`.
    pub fn check_bounds(&self, p: &PointerValue, size: u32) -> Result<Bounds, MemError> {
        let id = self.object_of(p)?;
        let total = self.objects[id].size;
        match &p.index {
            None => {
                let ok = p.base >= 0 && p.base + size as i64 <= total as i64;
                Ok(if ok { Bounds::InBounds } else { Bounds::Always })
            }
            Some((i, stride)) => {
                let (lo, hi) = self.index_range(total, p.base, *stride, size);
                if lo > hi {
                    return Ok(Bounds::Always);
                }
                let (min, max) = match i.ty() {
                    Ty::U32 => (0i64, u32::MAX as i64),
                    Ty::I8 => (-128, 127),
                    Ty::I32 => (i32::MIN as i64, i32::MAX as i64),
                };
                if hi < min || lo > max {
                    return Ok(Bounds::Always);
                }
                let mut cond: Option<Term> = None;
                if lo > min {
                    cond = Some(mk_binary(BinOp::Lt, i.clone(), Term::constant(lo as u32, i.ty().promote())));
                }
                if hi < max {
                    let c = mk_binary(BinOp::Gt, i.clone(), Term::constant(hi as u32, i.ty().promote()));
                    cond = Some(match cond {
                        None => c,
                        Some(l) => mk_binary(BinOp::LOr, l, c),
                    });
                }
                Ok(match cond {
                    None => Bounds::InBounds,
                    Some(c) => match c.as_const() {
                        Some(0) => Bounds::InBounds,
                        Some(_) => Bounds::Always,
                        None => Bounds::FaultWhen(c),
                    },
                })
            }
        }
    }

    /// Concrete byte offsets an access may touch, with the index value selecting each.
    fn candidates(&self, p: &PointerValue, size: u32) -> Result<Vec<(Option<i64>, u32)>, MemError> {
        let id = self.object_of(p)?;
        let obj = &self.objects[id];
        match &p.index {
            None => {
                if p.base < 0 || p.base + size as i64 > obj.size as i64 {
                    return Err(MemError::OutOfBounds {
                        object: obj.name.clone(),
                        offset: p.base,
                        size,
                        total: obj.size,
                    });
                }
                Ok(vec![(None, p.base as u32)])
            }
            Some((_, stride)) => {
                let (lo, hi) = self.index_range(obj.size, p.base, *stride, size);
                if lo > hi {
                    return Err(MemError::OutOfBounds {
                        object: obj.name.clone(),
                        offset: p.base,
                        size,
                        total: obj.size,
                    });
                }
                if hi - lo + 1 > MAX_INDEX_CANDIDATES {
                    return Err(MemError::NeedsConcreteIndex);
                }
                Ok((lo..=hi)
                    .map(|k| (Some(k), (p.base + k * *stride as i64) as u32))
                    .collect())
            }
        }
    }

    fn index_is(p: &PointerValue, k: i64) -> Term {
        let (i, _) = p.index.as_ref().expect("symbolic index");
        mk_binary(BinOp::Eq, i.clone(), Term::constant(k as u32, i.ty().promote()))
    }

    /// Reads a scalar of type `ty` through `p`. The caller has already
    /// constrained the access to be in bounds.
    pub fn load(&mut self, p: &PointerValue, ty: &Type) -> Result<Value, MemError> {
        let size = ty.size(&self.records);
        let id = self.object_of(p)?;
        let cands = self.candidates(p, size)?;
        if cands.len() == 1 {
            return self.load_at(id, cands[0].1, ty);
        }
        let mut acc: Option<Term> = None;
        for (k, off) in cands.into_iter().rev() {
            let v = match self.load_at(id, off, ty)? {
                Value::Int(t) => t,
                Value::Ptr(_) => return Err(MemError::NeedsConcreteIndex),
            };
            acc = Some(match acc {
                None => v,
                Some(rest) => mk_select(Self::index_is(p, k.unwrap()), v, rest),
            });
        }
        Ok(Value::Int(acc.expect("at least one candidate")))
    }

    /// Writes a scalar through `p`; same preconditions as [`load`](Self::load).
    pub fn store(&mut self, p: &PointerValue, ty: &Type, v: Value) -> Result<(), MemError> {
        let size = ty.size(&self.records);
        let id = self.object_of(p)?;
        let cands = self.candidates(p, size)?;
        if cands.len() == 1 {
            self.store_at(id, cands[0].1, size, v);
            return Ok(());
        }
        let Value::Int(t) = v else {
            return Err(MemError::NeedsConcreteIndex);
        };
        for (k, off) in cands {
            let old = match self.load_at(id, off, ty)? {
                Value::Int(o) => o,
                Value::Ptr(_) => return Err(MemError::NeedsConcreteIndex),
            };
            let nv = mk_select(Self::index_is(p, k.unwrap()), t.clone(), old);
            self.store_at(id, off, size, Value::Int(nv));
        }
        Ok(())
    }

    /// Replaces the bytes from `p` to the end of its object with fresh symbols named `prefix...`.
    pub fn havoc(&mut self, p: &PointerValue, prefix: &str) -> Result<(), MemError> {
        let id = self.object_of(p)?;
        let size = self.objects[id].size;
        let start = match &p.index {
            None => p.base.clamp(0, size as i64) as u32,
            Some(_) => 0,
        };
        let o = self.obj_mut(id);
        let dead: Vec<u32> = o.cells.range(start.saturating_sub(3)..).map(|(k, _)| *k).collect();
        for k in dead {
            let c = o.cells.remove(&k).unwrap();
            if k < start {
                keep_bytes(&mut o.cells, k, &c, start, u32::MAX);
            }
        }
        o.havoc.push((start, size, prefix.to_string()));
        Ok(())
    }

    fn load_at(&mut self, id: ObjId, off: u32, ty: &Type) -> Result<Value, MemError> {
        let size = ty.size(&self.records);
        self.materialize(id, off, size)?;
        let obj = &self.objects[id];
        if let Some((s, c)) = obj.covering(off) {
            if s == off && c.size == size {
                return match (&c.value, ty) {
                    (Value::Int(t), Type::Int(want)) => Ok(Value::Int(retype(t.clone(), *want))),
                    (Value::Ptr(p), Type::Pointer(_) | Type::VoidPtr) => Ok(Value::Ptr(p.clone())),
                    (Value::Int(t), _) => Ok(Value::Ptr(PointerValue::from_int(t.clone()))),
                    (Value::Ptr(_), _) => Err(MemError::PointerAsInteger),
                };
            }
        }
        let mut acc: Option<Term> = None;
        for b in off..off + size {
            let (s, c) = obj.covering(b).expect("materialized");
            let Value::Int(t) = &c.value else {
                return Err(MemError::PointerAsInteger);
            };
            let byte = extract_byte(t, b - s);
            let shifted = mk_binary(BinOp::Shl, byte, Term::constant(8 * (b - off), Ty::U32));
            acc = Some(match acc {
                None => shifted,
                Some(a) => mk_binary(BinOp::BitOr, a, shifted),
            });
        }
        let raw = acc.expect("non-empty access");
        Ok(match ty {
            Type::Int(Ty::I8) => Value::Int(mk_cast(Ty::I8, raw)),
            Type::Int(t) => Value::Int(retype(raw, *t)),
            _ => Value::Ptr(PointerValue::from_int(raw)),
        })
    }

    fn store_at(&mut self, id: ObjId, off: u32, size: u32, v: Value) {
        let o = self.obj_mut(id);
        let end = off + size;
        let hit: Vec<u32> = o.cells.range(off.saturating_sub(3)..end).map(|(k, _)| *k).collect();
        for k in hit {
            let c = &o.cells[&k];
            if k + c.size <= off {
                continue;
            }
            let c = o.cells.remove(&k).unwrap();
            keep_bytes(&mut o.cells, k, &c, off, end);
        }
        let value = match v {
            Value::Int(t) if size == 1 => Value::Int(mk_cast(Ty::I8, t)),
            v => v,
        };
        o.cells.insert(off, Cell { size, value });
    }

    /// Creates cells for never-written bytes in `[off, off+size)`.
    fn materialize(&mut self, id: ObjId, off: u32, size: u32) -> Result<(), MemError> {
        for b in off..off + size {
            if self.objects[id].covering(b).is_some() {
                continue;
            }
            let obj = &self.objects[id];
            let leaf = leaf_at(&obj.ty, b, &self.records).unwrap_or(Leaf {
                path: format!("@{b}"),
                offset: b,
                ty: Type::Int(Ty::I8),
            });
            let havoc = obj.havoc.iter().rev().find(|(s, e, _)| *s <= b && b < *e).map(|h| h.2.clone());
            let name = match (&havoc, &obj.fresh) {
                (Some(prefix), _) => Some(format!("{prefix}{}", leaf.path)),
                (None, Fresh::Input(base)) => Some(format!("{base}{}", leaf.path)),
                (None, Fresh::Uninit) => None,
            };
            let value = match (&leaf.ty, name) {
                (Type::Int(t), Some(n)) => {
                    self.inputs.push(SymVar::new(n.clone(), *t));
                    Value::Int(Term::var(n, *t))
                }
                (Type::Int(t), None) => {
                    self.next_fresh += 1;
                    Value::Int(Term::var(format!("__uninit_{}", self.next_fresh - 1), *t))
                }
                (Type::Pointer(pointee), Some(n)) if **pointee != Type::Void => {
                    let bty = Type::Array(pointee.clone(), self.backing_len);
                    let bid = self.alloc(n.clone(), bty, Origin::Backing, Fresh::Input(n));
                    Value::Ptr(PointerValue::to_object(bid))
                }
                _ => Value::Ptr(PointerValue::unbound()),
            };
            let lsize = leaf.ty.size(&self.records);
            let lo = leaf.offset;
            let obj = self.obj_mut(id);
            let free = (lo..lo + lsize).all(|x| obj.covering(x).is_none());
            if free {
                obj.cells.insert(lo, Cell { size: lsize, value });
            } else {
                let Value::Int(t) = value else {
                    return Err(MemError::PointerAsInteger);
                };
                for x in lo..lo + lsize {
                    if obj.covering(x).is_none() {
                        obj.cells.insert(
                            x,
                            Cell {
                                size: 1,
                                value: Value::Int(mk_cast(Ty::I8, extract_byte(&t, x - lo))),
                            },
                        );
                    }
                }
            }
        }
        Ok(())
    }

    /// Stable rendering of every written cell, for snapshot comparisons.
    pub fn dump(&self) -> Vec<(String, u32, String)> {
        let mut out = Vec::new();
        for o in &self.objects {
            for (off, c) in &o.cells {
                let v = match &c.value {
                    Value::Int(t) => t.to_string(),
                    Value::Ptr(p) => format!("{p:?}"),
                };
                out.push((o.name.clone(), *off, v));
            }
        }
        out
    }
}

/// Re-inserts the bytes of a removed cell that fall outside `[from, to)`.
fn keep_bytes(cells: &mut BTreeMap<u32, Cell>, start: u32, c: &Cell, from: u32, to: u32) {
    let Value::Int(t) = &c.value else { return };
    for b in start..start + c.size {
        if b < from || b >= to {
            cells.insert(
                b,
                Cell {
                    size: 1,
                    value: Value::Int(mk_cast(Ty::I8, extract_byte(t, b - start))),
                },
            );
        }
    }
}

/// Byte `k` (little-endian) of `t`, as an unsigned value in `0..=255`.
fn extract_byte(t: &Term, k: u32) -> Term {
    let w = mk_cast(Ty::U32, t.clone());
    let shifted = if k == 0 { w } else { mk_binary(BinOp::Shr, w, Term::constant(8 * k, Ty::U32)) };
    mk_binary(BinOp::BitAnd, shifted, Term::constant(0xFF, Ty::U32))
}

#[cfg(test)]
mod tests;
