use crate::frontend::{RecordDecl, Type};

/// A scalar position inside a typed object.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Leaf {
    /// Access path suffix, e.g. `[2].m`.
    pub path: String,
    pub offset: u32,
    pub ty: Type,
}

/// Member standing for a whole union: the first one of maximal size.
pub fn union_canonical(r: &RecordDecl, records: &[RecordDecl]) -> usize {
    let mut best = 0;
    for (i, m) in r.members.iter().enumerate() {
        if m.ty.size(records) > r.members[best].ty.size(records) {
            best = i;
        }
    }
    best
}

/// The scalar leaf of `ty` covering byte `off`.
pub fn leaf_at(ty: &Type, off: u32, records: &[RecordDecl]) -> Option<Leaf> {
    match ty {
        Type::Int(_) | Type::Pointer(_) | Type::VoidPtr => (off < ty.size(records)).then(|| Leaf {
            path: String::new(),
            offset: 0,
            ty: ty.clone(),
        }),
        Type::Array(e, n) => {
            let es = e.size(records);
            let i = off / es;
            if es == 0 || i >= *n {
                return None;
            }
            let inner = leaf_at(e, off % es, records)?;
            Some(Leaf {
                path: format!("[{i}]{}", inner.path),
                offset: i * es + inner.offset,
                ty: inner.ty,
            })
        }
        Type::Record(r) => {
            let rec = &records[*r];
            let m = if rec.is_union {
                &rec.members[union_canonical(rec, records)]
            } else {
                rec.members
                    .iter()
                    .find(|m| m.offset <= off && off < m.offset + m.ty.size(records))?
            };
            let inner = leaf_at(&m.ty, off - m.offset, records)?;
            Some(Leaf {
                path: format!(".{}{}", m.name, inner.path),
                offset: m.offset + inner.offset,
                ty: inner.ty,
            })
        }
        Type::Void => None,
    }
}

/// All scalar leaves of `ty` in address order.
pub fn leaves(ty: &Type, records: &[RecordDecl]) -> Vec<Leaf> {
    let mut out = Vec::new();
    let size = ty.size(records);
    let mut off = 0;
    while off < size {
        match leaf_at(ty, off, records) {
            Some(l) => {
                off = l.offset + l.ty.size(records);
                out.push(l);
            }
            None => off += 1,
        }
    }
    out
}
